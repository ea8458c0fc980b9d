#include "luskit/report_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

namespace luskit {

namespace {

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

std::string format_label(double iou) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), iou);
  (void)ec;
  return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

APTable to_table(const APReport& report) {
  APTable t;
  t.mode = report.mode;
  for (const auto& th : report.thresholds) {
    t.columns.push_back({format_label(th.iou), th.iou, th.per_class, th.mean_ap});
  }
  return t;
}

APTable parse_per_class_table(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<std::map<FeatureClass, double>> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_csv(line);
    if (header.empty()) {
      if (fields.size() < 2) throw ParseError("table header needs at least one value column", line_no);
      header = std::move(fields);
      values.resize(header.size() - 1);
      continue;
    }
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields", line_no);
    }
    if (fields[0] == "Total mAP") continue;
    const auto cls = parse_feature_class(fields[0]);
    if (!cls) throw ParseError("unknown class '" + fields[0] + "'", line_no);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (fields[i] == "NA") continue;
      const auto v = parse_double(fields[i]);
      if (!v || *v < 0.0 || *v > 100.0) {
        throw ParseError("value '" + fields[i] + "' is not a percentage", line_no);
      }
      if (!values[i - 1].emplace(*cls, *v / 100.0).second) {
        throw ParseError("class " + fields[0] + " listed twice", line_no);
      }
    }
  }
  if (header.empty()) throw ParseError("per-class table is empty");

  APTable t;
  for (std::size_t i = 0; i < values.size(); ++i) {
    APTable::Column col;
    col.label = header[i + 1];
    col.iou = parse_double(col.label);
    for (const auto& [c, v] : values[i]) col.per_class[index_of(c)] = v;
    col.mean_ap = mean_average_precision(values[i]);
    t.columns.push_back(std::move(col));
  }
  return t;
}

std::string table_to_csv(const APTable& table) {
  std::string out = "feature";
  for (const auto& col : table.columns) out += "," + col.label;
  out += '\n';
  for (FeatureClass c : kAllFeatureClasses) {
    out += to_string(c);
    for (const auto& col : table.columns) {
      const auto& v = col.per_class[index_of(c)];
      out += "," + (v ? format_percent(*v) : std::string("NA"));
    }
    out += '\n';
  }
  out += "Total mAP";
  for (const auto& col : table.columns) out += "," + format_percent(col.mean_ap);
  out += '\n';
  return out;
}

std::string table_to_text(const APTable& table) {
  char buf[64];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-18s", "feature \\ IoU");
  out += buf;
  for (const auto& col : table.columns) {
    std::snprintf(buf, sizeof(buf), "%10s", col.label.c_str());
    out += buf;
  }
  out += '\n';
  auto row = [&](std::string_view name, auto&& value_of) {
    std::snprintf(buf, sizeof(buf), "%-18.*s", static_cast<int>(name.size()), name.data());
    out += buf;
    for (const auto& col : table.columns) {
      const std::optional<double> v = value_of(col);
      std::snprintf(buf, sizeof(buf), "%10s", v ? format_percent(*v).c_str() : "NA");
      out += buf;
    }
    out += '\n';
  };
  for (FeatureClass c : kAllFeatureClasses) {
    row(to_string(c), [c](const APTable::Column& col) { return col.per_class[index_of(c)]; });
  }
  row("Total mAP", [](const APTable::Column& col) { return std::optional<double>(col.mean_ap); });
  if (table.mode) out += "mode: " + std::string(to_string(*table.mode)) + "\n";
  return out;
}

std::string table_to_json(const APTable& table) {
  nlohmann::ordered_json doc;
  doc["mode"] = table.mode ? nlohmann::ordered_json(std::string(to_string(*table.mode))) : nlohmann::ordered_json();
  doc["columns"] = nlohmann::ordered_json::array();
  for (const auto& col : table.columns) {
    nlohmann::ordered_json c;
    c["label"] = col.label;
    c["iou"] = col.iou ? nlohmann::ordered_json(*col.iou) : nlohmann::ordered_json();
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (FeatureClass fc : kAllFeatureClasses) {
      const auto& v = col.per_class[index_of(fc)];
      per[std::string(to_string(fc))] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
    }
    c["per_class"] = std::move(per);
    c["map"] = col.mean_ap;
    doc["columns"].push_back(std::move(c));
  }
  return doc.dump(2) + "\n";
}

}  // namespace luskit
