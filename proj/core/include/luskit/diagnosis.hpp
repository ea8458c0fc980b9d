#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "luskit/annotations.hpp"
#include "luskit/geometry.hpp"

namespace luskit {

// ---- Millimetre thresholds -------------------------------------------------

inline constexpr double kMaxNormalPleuraMm = 2.0;
inline constexpr double kMaxCoalescentGapMm = 3.0;

struct CalibrationConfig {
  double pixels_per_mm = 0.0;

  void validate() const;  // positive and finite
};

enum class PleuraThickness : std::uint8_t { WithinNormal, Thick };
enum class BLineSpacing : std::uint8_t { Separate, Coalescent };

std::string_view to_string(PleuraThickness t) noexcept;
std::string_view to_string(BLineSpacing s) noexcept;

/// Thick iff box height in mm exceeds 2.0; exactly 2.0 mm is normal.
PleuraThickness classify_pleura_thickness(const BoundingBox& box, const CalibrationConfig& calib);

/// Separate iff gap exceeds 3.0 mm; exactly 3.0 mm is coalescent.
BLineSpacing classify_bline_spacing(double gap_mm);

/// Relabels NormalPleura detections whose measured thickness is over the
/// normal limit as ThickPleura. Other detections pass through unchanged.
std::vector<Detection> apply_pleura_calibration(std::span<const Detection> detections,
                                                const CalibrationConfig& calib);

// ---- Scan aggregation ------------------------------------------------------

struct ScanFrame {
  std::int64_t frame_index = 0;
  std::vector<Detection> detections;
};

struct PresenceRule {
  double min_fraction = 0.2;
  std::int64_t min_frames = 3;
};

struct FeaturePresence {
  bool present = false;
  double frame_frequency = 0.0;  // supporting frames / total frames
  double mean_score = 0.0;       // mean of the per-frame best score over supporting frames
  std::vector<std::int64_t> supporting_frames;
};

struct ScanFeatureSummary {
  std::int64_t total_frames = 0;
  std::array<FeaturePresence, kFeatureClassCount> features{};

  const FeaturePresence& operator[](FeatureClass c) const noexcept { return features[index_of(c)]; }
  std::set<FeatureClass> present_features() const;
};

/// A class is present when the number of frames holding at least one of
/// its detections with score >= min_score reaches
/// max(min_frames, ceil(min_fraction * total_frames)).
ScanFeatureSummary aggregate_scan(std::span<const ScanFrame> frames, double min_score,
                                  const PresenceRule& rule);

/// Convenience: the frames of one video in a prediction dataset.
std::vector<ScanFrame> scan_frames(const Dataset& predictions, const std::string& video_id);

// ---- Rules -----------------------------------------------------------------

struct AgeGate {
  std::optional<double> min_hours;
  bool min_inclusive = true;
  std::optional<double> max_hours;
  bool max_inclusive = true;

  bool admits(double age_hours) const noexcept;
  std::string describe() const;
};

struct ConditionalConflict {
  FeatureClass feature;
  ConditionClass unless_full_match;  // tolerated when this condition scores 1
};

struct ConditionRule {
  ConditionClass condition = ConditionClass::Normal;
  /// Each group is satisfied by any one of its members.
  std::vector<std::vector<FeatureClass>> required_groups;
  std::vector<FeatureClass> incompatible;
  std::vector<ConditionalConflict> conditionally_incompatible;
  AgeGate age_gate;
  std::string note;
};

struct RuleSet {
  std::string name;
  std::vector<ConditionRule> rules;

  /// Exactly one rule per condition; groups non-empty; required and
  /// incompatible features disjoint. Throws PreconditionError.
  void validate() const;
};

/// Throws ParseError on malformed JSON or unknown tokens and
/// PreconditionError when the rules fail validate().
RuleSet parse_rule_set(std::istream& in);

/// The rule file compiled into the library (core/data/condition_rules.json).
const RuleSet& builtin_rule_set();

// ---- Ranking ---------------------------------------------------------------

struct DiagnosisCandidate {
  ConditionClass condition = ConditionClass::Normal;
  double match_score = 0.0;  // satisfied groups / required groups
  std::vector<FeatureClass> matched;
  std::vector<FeatureClass> missing;
  std::vector<FeatureClass> conflicting;
  bool age_compatible = true;
  std::string rationale;
};

/// Scores every rule against the present features and returns one candidate
/// per condition. Age-compatible candidates come first; within each stratum
/// the order is match score (desc), conflict count (asc), condition name.
/// Unknown age never fails a gate. Age only affects ordering, never scores.
std::vector<DiagnosisCandidate> rank_conditions(const std::set<FeatureClass>& present,
                                                std::optional<double> age_hours,
                                                const RuleSet& rules = builtin_rule_set());

std::vector<DiagnosisCandidate> rank_conditions(const ScanFeatureSummary& summary,
                                                std::optional<double> age_hours,
                                                const RuleSet& rules = builtin_rule_set());

std::string candidates_to_text(std::span<const DiagnosisCandidate> candidates);

// ---- Frame report ----------------------------------------------------------

struct FrameReport {
  FrameKey frame;
  double image_width = 512.0;
  double image_height = 512.0;
  std::vector<Detection> detections;
  std::vector<DiagnosisCandidate> candidates;
};

FrameReport annotate_frame_report(const FrameKey& frame, std::span<const Detection> detections,
                                  std::span<const DiagnosisCandidate> candidates,
                                  double image_width = 512.0, double image_height = 512.0);

std::string frame_report_to_json(const FrameReport& report);

/// Standalone SVG overlay: one labelled rectangle per detection.
std::string frame_report_to_svg(const FrameReport& report);

/// JSON array of candidates, shared by the frame report and the CLI.
std::string candidates_to_json(std::span<const DiagnosisCandidate> candidates);

}  // namespace luskit
