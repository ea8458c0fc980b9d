#include "luskit/diagnosis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "luskit/errors.hpp"

namespace luskit {

namespace detail {
extern const std::string_view kBuiltinRulesJson;
}

namespace {

using ojson = nlohmann::ordered_json;

FeatureClass feature_from_json(const nlohmann::json& j, std::string_view context) {
  if (!j.is_string()) throw ParseError(std::string(context) + ": feature must be a string");
  const auto c = parse_feature_class(j.get<std::string>());
  if (!c) throw ParseError(std::string(context) + ": unknown feature '" + j.get<std::string>() + "'");
  return *c;
}

ConditionClass condition_from_json(const nlohmann::json& j, std::string_view context) {
  if (!j.is_string()) throw ParseError(std::string(context) + ": condition must be a string");
  const auto c = parse_condition(j.get<std::string>());
  if (!c) throw ParseError(std::string(context) + ": unknown condition '" + j.get<std::string>() + "'");
  return *c;
}

std::string join(const std::vector<FeatureClass>& fs, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    if (i) out += sep;
    out += to_string(fs[i]);
  }
  return out;
}

std::string format_hours(double h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", h);
  return buf;
}

ojson features_json(const std::vector<FeatureClass>& fs) {
  ojson a = ojson::array();
  for (FeatureClass f : fs) a.push_back(std::string(to_string(f)));
  return a;
}

ojson candidate_json(const DiagnosisCandidate& c) {
  ojson j;
  j["condition"] = std::string(to_string(c.condition));
  j["match_score"] = c.match_score;
  j["matched"] = features_json(c.matched);
  j["missing"] = features_json(c.missing);
  j["conflicting"] = features_json(c.conflicting);
  j["age_compatible"] = c.age_compatible;
  j["rationale"] = c.rationale;
  return j;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

constexpr std::array<std::string_view, kFeatureClassCount> kOverlayColours = {
    "#1f77b4", "#2ca02c", "#ff7f0e", "#d62728", "#9467bd", "#8c564b", "#e377c2",
};

}  // namespace

void CalibrationConfig::validate() const {
  if (!(pixels_per_mm > 0.0) || !std::isfinite(pixels_per_mm)) {
    throw PreconditionError("pixels_per_mm must be positive and finite");
  }
}

std::string_view to_string(PleuraThickness t) noexcept {
  return t == PleuraThickness::Thick ? "Thick" : "WithinNormal";
}

std::string_view to_string(BLineSpacing s) noexcept {
  return s == BLineSpacing::Separate ? "Separate" : "Coalescent";
}

PleuraThickness classify_pleura_thickness(const BoundingBox& box, const CalibrationConfig& calib) {
  calib.validate();
  const double mm = box.height() / calib.pixels_per_mm;
  return mm > kMaxNormalPleuraMm ? PleuraThickness::Thick : PleuraThickness::WithinNormal;
}

BLineSpacing classify_bline_spacing(double gap_mm) {
  if (!(gap_mm >= 0.0) || !std::isfinite(gap_mm)) {
    throw PreconditionError("B-line gap must be a non-negative finite length");
  }
  return gap_mm > kMaxCoalescentGapMm ? BLineSpacing::Separate : BLineSpacing::Coalescent;
}

std::vector<Detection> apply_pleura_calibration(std::span<const Detection> detections,
                                                const CalibrationConfig& calib) {
  calib.validate();
  std::vector<Detection> out(detections.begin(), detections.end());
  for (Detection& d : out) {
    if (d.feature == FeatureClass::NormalPleura &&
        classify_pleura_thickness(d.box, calib) == PleuraThickness::Thick) {
      d.feature = FeatureClass::ThickPleura;
    }
  }
  return out;
}

std::set<FeatureClass> ScanFeatureSummary::present_features() const {
  std::set<FeatureClass> out;
  for (FeatureClass c : kAllFeatureClasses) {
    if (features[index_of(c)].present) out.insert(c);
  }
  return out;
}

ScanFeatureSummary aggregate_scan(std::span<const ScanFrame> frames, double min_score,
                                  const PresenceRule& rule) {
  if (frames.empty()) throw PreconditionError("cannot summarise an empty scan");
  if (!(min_score >= 0.0 && min_score <= 1.0)) throw PreconditionError("min_score must lie in [0, 1]");
  if (!(rule.min_fraction > 0.0 && rule.min_fraction <= 1.0) || rule.min_frames < 1) {
    throw PreconditionError("presence rule needs min_fraction in (0, 1] and min_frames >= 1");
  }

  ScanFeatureSummary s;
  s.total_frames = static_cast<std::int64_t>(frames.size());
  std::array<double, kFeatureClassCount> score_sum{};
  for (const ScanFrame& f : frames) {
    std::array<std::optional<double>, kFeatureClassCount> best{};
    for (const Detection& d : f.detections) {
      if (d.score < min_score) continue;
      auto& b = best[index_of(d.feature)];
      b = std::max(b.value_or(0.0), d.score);
    }
    for (std::size_t c = 0; c < kFeatureClassCount; ++c) {
      if (!best[c]) continue;
      s.features[c].supporting_frames.push_back(f.frame_index);
      score_sum[c] += *best[c];
    }
  }

  // The small slack keeps products such as 0.3 * 10 from rounding up to 4.
  const auto by_fraction = static_cast<std::int64_t>(
      std::ceil(rule.min_fraction * static_cast<double>(s.total_frames) - 1e-9));
  const std::int64_t needed = std::max(rule.min_frames, by_fraction);
  for (std::size_t c = 0; c < kFeatureClassCount; ++c) {
    FeaturePresence& p = s.features[c];
    const auto n = static_cast<std::int64_t>(p.supporting_frames.size());
    p.frame_frequency = static_cast<double>(n) / static_cast<double>(s.total_frames);
    p.mean_score = n == 0 ? 0.0 : score_sum[c] / static_cast<double>(n);
    p.present = n > 0 && n >= needed;
  }
  return s;
}

std::vector<ScanFrame> scan_frames(const Dataset& predictions, const std::string& video_id) {
  std::vector<ScanFrame> out;
  const auto lo = predictions.frames().lower_bound(FrameKey{video_id, 0});
  for (auto it = lo; it != predictions.frames().end() && it->first.video_id == video_id; ++it) {
    out.push_back({it->first.frame_index, it->second});
  }
  return out;
}

bool AgeGate::admits(double age_hours) const noexcept {
  if (min_hours && (min_inclusive ? age_hours < *min_hours : age_hours <= *min_hours)) return false;
  if (max_hours && (max_inclusive ? age_hours > *max_hours : age_hours >= *max_hours)) return false;
  return true;
}

std::string AgeGate::describe() const {
  if (!min_hours && !max_hours) return "any age";
  std::string out;
  if (min_hours) out += (min_inclusive ? ">= " : "> ") + format_hours(*min_hours) + " h";
  if (min_hours && max_hours) out += " and ";
  if (max_hours) out += (max_inclusive ? "<= " : "< ") + format_hours(*max_hours) + " h";
  return out;
}

void RuleSet::validate() const {
  std::set<ConditionClass> seen;
  for (const ConditionRule& r : rules) {
    const std::string name(to_string(r.condition));
    if (!seen.insert(r.condition).second) throw PreconditionError("duplicate rule for " + name);
    if (r.required_groups.empty()) throw PreconditionError(name + ": no required features");
    for (const auto& g : r.required_groups) {
      if (g.empty()) throw PreconditionError(name + ": empty requirement group");
      for (FeatureClass f : g) {
        if (std::find(r.incompatible.begin(), r.incompatible.end(), f) != r.incompatible.end()) {
          throw PreconditionError(name + ": " + std::string(to_string(f)) +
                                  " is both required and incompatible");
        }
      }
    }
    if (r.age_gate.min_hours && r.age_gate.max_hours &&
        *r.age_gate.min_hours > *r.age_gate.max_hours) {
      throw PreconditionError(name + ": empty age interval");
    }
  }
  for (ConditionClass c : kAllConditions) {
    if (!seen.count(c)) throw PreconditionError("rule set lacks a rule for " + std::string(to_string(c)));
  }
}

RuleSet parse_rule_set(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("rule file: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("rules") || !doc["rules"].is_array()) {
    throw ParseError("rule file: expected an object with a \"rules\" array");
  }
  RuleSet set;
  set.name = doc.value("name", "");
  for (const auto& jr : doc["rules"]) {
    if (!jr.is_object()) throw ParseError("rule file: each rule must be an object");
    ConditionRule r;
    r.condition = condition_from_json(jr.value("condition", nlohmann::json()), "rule");
    const std::string ctx = "rule " + std::string(to_string(r.condition));

    const auto& req = jr.value("requires", nlohmann::json::array());
    if (!req.is_array()) throw ParseError(ctx + ": \"requires\" must be an array");
    for (const auto& jg : req) {
      std::vector<FeatureClass> group;
      if (jg.is_string()) {
        group.push_back(feature_from_json(jg, ctx));
      } else if (jg.is_array()) {
        for (const auto& jf : jg) group.push_back(feature_from_json(jf, ctx));
      } else {
        throw ParseError(ctx + ": requirement groups must be strings or arrays");
      }
      r.required_groups.push_back(std::move(group));
    }
    for (const auto& jf : jr.value("incompatible", nlohmann::json::array())) {
      r.incompatible.push_back(feature_from_json(jf, ctx));
    }
    for (const auto& jc : jr.value("conditionally_incompatible", nlohmann::json::array())) {
      if (!jc.is_object()) throw ParseError(ctx + ": conditional conflicts must be objects");
      r.conditionally_incompatible.push_back(
          {feature_from_json(jc.value("feature", nlohmann::json()), ctx),
           condition_from_json(jc.value("unless_full_match", nlohmann::json()), ctx)});
    }
    const auto& age = jr.value("age_hours", nlohmann::json::object());
    if (!age.is_object()) throw ParseError(ctx + ": \"age_hours\" must be an object");
    auto read_bound = [&](const char* key) -> std::optional<double> {
      const auto it = age.find(key);
      if (it == age.end() || it->is_null()) return std::nullopt;
      if (!it->is_number()) throw ParseError(ctx + ": age bound must be a number");
      return it->get<double>();
    };
    r.age_gate.min_hours = read_bound("min");
    r.age_gate.max_hours = read_bound("max");
    r.age_gate.min_inclusive = age.value("min_inclusive", true);
    r.age_gate.max_inclusive = age.value("max_inclusive", true);
    r.note = jr.value("note", "");
    set.rules.push_back(std::move(r));
  }
  set.validate();
  return set;
}

const RuleSet& builtin_rule_set() {
  static const RuleSet rules = [] {
    std::istringstream in{std::string(detail::kBuiltinRulesJson)};
    return parse_rule_set(in);
  }();
  return rules;
}

std::vector<DiagnosisCandidate> rank_conditions(const std::set<FeatureClass>& present,
                                                std::optional<double> age_hours,
                                                const RuleSet& rules) {
  rules.validate();
  auto has = [&](FeatureClass f) { return present.count(f) > 0; };

  std::vector<DiagnosisCandidate> out;
  std::map<ConditionClass, double> scores;
  std::vector<std::size_t> satisfied_groups;
  for (const ConditionRule& r : rules.rules) {
    DiagnosisCandidate c;
    c.condition = r.condition;
    std::size_t satisfied = 0;
    for (const auto& group : r.required_groups) {
      bool any = false;
      for (FeatureClass f : group) {
        if (has(f)) {
          any = true;
          if (std::find(c.matched.begin(), c.matched.end(), f) == c.matched.end()) {
            c.matched.push_back(f);
          }
        }
      }
      if (any) {
        ++satisfied;
      } else {
        c.missing.insert(c.missing.end(), group.begin(), group.end());
      }
    }
    c.match_score = static_cast<double>(satisfied) / static_cast<double>(r.required_groups.size());
    for (FeatureClass f : r.incompatible) {
      if (has(f)) c.conflicting.push_back(f);
    }
    c.age_compatible = !age_hours || r.age_gate.admits(*age_hours);
    scores[r.condition] = c.match_score;
    satisfied_groups.push_back(satisfied);
    out.push_back(std::move(c));
  }

  // Conditional conflicts depend on other rules' scores.
  for (std::size_t i = 0; i < rules.rules.size(); ++i) {
    const ConditionRule& r = rules.rules[i];
    DiagnosisCandidate& c = out[i];
    for (const ConditionalConflict& cc : r.conditionally_incompatible) {
      if (has(cc.feature) && scores[cc.unless_full_match] < 1.0) c.conflicting.push_back(cc.feature);
    }

    std::string why = std::to_string(satisfied_groups[i]) + "/" + std::to_string(r.required_groups.size()) + " requirement groups met";
    if (!c.matched.empty()) why += "; matched " + join(c.matched, ", ");
    if (!c.missing.empty()) why += "; missing " + join(c.missing, ", ");
    if (!c.conflicting.empty()) why += "; conflicting " + join(c.conflicting, ", ");
    if (!age_hours) {
      why += "; age unknown (gate " + r.age_gate.describe() + " not applied)";
    } else {
      why += "; age " + format_hours(*age_hours) + " h " +
             (c.age_compatible ? "within" : "outside") + " gate " + r.age_gate.describe();
    }
    c.rationale = std::move(why);
  }

  std::sort(out.begin(), out.end(), [](const DiagnosisCandidate& a, const DiagnosisCandidate& b) {
    if (a.age_compatible != b.age_compatible) return a.age_compatible;
    if (a.match_score != b.match_score) return a.match_score > b.match_score;
    if (a.conflicting.size() != b.conflicting.size()) return a.conflicting.size() < b.conflicting.size();
    return to_string(a.condition) < to_string(b.condition);
  });
  return out;
}

std::vector<DiagnosisCandidate> rank_conditions(const ScanFeatureSummary& summary,
                                                std::optional<double> age_hours,
                                                const RuleSet& rules) {
  return rank_conditions(summary.present_features(), age_hours, rules);
}

std::string candidates_to_text(std::span<const DiagnosisCandidate> candidates) {
  std::string out = "Candidate conditions for clinician review (not a diagnosis):\n";
  char buf[96];
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    std::snprintf(buf, sizeof(buf), "%zu. %-6s score %.2f  %s\n", i + 1,
                  std::string(to_string(c.condition)).c_str(), c.match_score,
                  c.age_compatible ? "" : "[age-incompatible]");
    out += buf;
    out += "   " + c.rationale + "\n";
  }
  return out;
}

std::string candidates_to_json(std::span<const DiagnosisCandidate> candidates) {
  ojson a = ojson::array();
  for (const auto& c : candidates) a.push_back(candidate_json(c));
  return a.dump(2) + "\n";
}

FrameReport annotate_frame_report(const FrameKey& frame, std::span<const Detection> detections,
                                  std::span<const DiagnosisCandidate> candidates,
                                  double image_width, double image_height) {
  if (!(image_width > 0.0) || !(image_height > 0.0)) {
    throw PreconditionError("report image dimensions must be positive");
  }
  FrameReport r;
  r.frame = frame;
  r.image_width = image_width;
  r.image_height = image_height;
  r.detections.assign(detections.begin(), detections.end());
  r.candidates.assign(candidates.begin(), candidates.end());
  return r;
}

std::string frame_report_to_json(const FrameReport& report) {
  ojson doc;
  doc["video_id"] = report.frame.video_id;
  doc["frame_index"] = report.frame.frame_index;
  doc["image"] = {{"width", report.image_width}, {"height", report.image_height}};
  ojson dets = ojson::array();
  for (const Detection& d : report.detections) {
    ojson j;
    j["class"] = std::string(to_string(d.feature));
    j["score"] = d.score;
    j["box"] = {d.box.xmin, d.box.ymin, d.box.xmax, d.box.ymax};
    dets.push_back(std::move(j));
  }
  doc["detections"] = std::move(dets);
  ojson cands = ojson::array();
  for (const auto& c : report.candidates) cands.push_back(candidate_json(c));
  doc["candidates"] = std::move(cands);
  return doc.dump(2) + "\n";
}

std::string frame_report_to_svg(const FrameReport& report) {
  std::string out;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                "viewBox=\"0 0 %g %g\">\n",
                report.image_width, report.image_height, report.image_width, report.image_height);
  out += buf;
  out += "  <title>" + xml_escape(report.frame.video_id) + " frame " +
         std::to_string(report.frame.frame_index) + "</title>\n";
  for (const Detection& d : report.detections) {
    const auto colour = kOverlayColours[index_of(d.feature)];
    std::snprintf(buf, sizeof(buf),
                  "  <g class=\"detection\">\n"
                  "    <rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
                  "stroke=\"%.*s\" stroke-width=\"2\"/>\n"
                  "    <text x=\"%g\" y=\"%g\" font-size=\"12\" fill=\"%.*s\">%s %.2f</text>\n"
                  "  </g>\n",
                  d.box.xmin, d.box.ymin, d.box.width(), d.box.height(),
                  static_cast<int>(colour.size()), colour.data(), d.box.xmin,
                  std::max(12.0, d.box.ymin - 3.0), static_cast<int>(colour.size()), colour.data(),
                  std::string(to_string(d.feature)).c_str(), d.score);
    out += buf;
  }
  out += "</svg>\n";
  return out;
}

}  // namespace luskit
