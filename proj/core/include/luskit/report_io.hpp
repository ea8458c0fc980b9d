#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "luskit/evaluation.hpp"

namespace luskit {

/// Tabular view of an AP report: one column per IoU threshold, one row per
/// class, plus the overall mAP. Values are fractions in [0, 1].
struct APTable {
  std::optional<EvaluationMode> mode;
  struct Column {
    std::string label;
    std::optional<double> iou;
    std::array<std::optional<double>, kFeatureClassCount> per_class{};
    double mean_ap = 0.0;
  };
  std::vector<Column> columns;
};

APTable to_table(const APReport& report);

/// Reads a per-class table in the CSV layout written by table_to_csv():
///
///   feature,0.4,0.45,0.5
///   ALines,81.9,74.8,67.5
///   ...
///   Total mAP,86.4,82.93,78.38     (optional, ignored)
///
/// Values are percentages. Header labels that parse as numbers become the
/// column's IoU. Every column must carry all seven classes; the mean is
/// recomputed, never read.
APTable parse_per_class_table(std::istream& in);

/// Percentages with two decimals; absent classes print "NA".
std::string table_to_csv(const APTable& table);
std::string table_to_text(const APTable& table);

/// {"mode": "per-frame"|"dataset"|null,
///  "columns": [{"label": "0.4", "iou": 0.4, "per_class": {"ALines": 0.82, ...}, "map": 0.86}]}
std::string table_to_json(const APTable& table);

}  // namespace luskit
