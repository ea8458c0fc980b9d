#include "luskit/annotations.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>

#include "luskit/errors.hpp"
#include "luskit/random.hpp"

namespace luskit {

namespace {

constexpr std::array<std::string_view, 5> kConditionTokens = {"Normal", "RDS", "TTN", "PDA", "CLD"};

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_number(std::string_view token, std::string_view what, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty()) {
    throw ParseError("invalid " + std::string(what) + " '" + std::string(token) + "'", line_no);
  }
  if (!std::isfinite(v)) {
    throw ParseError(std::string(what) + " must be finite", line_no);
  }
  return v;
}

std::int64_t parse_frame_index(std::string_view token, std::size_t line_no) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty() || v < 0) {
    throw ParseError("frame index must be a non-negative integer, got '" + std::string(token) + "'",
                     line_no);
  }
  return v;
}

void append_number(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  out.append(buf, ptr);
}

Dataset parse_csv(std::istream& in, DatasetKind kind) {
  const bool with_score = kind == DatasetKind::Predictions;
  const std::size_t box_fields = with_score ? 8 : 7;
  Dataset d(kind);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    const auto f = split_fields(line);
    if (f.size() != 2 && f.size() != box_fields) {
      throw ParseError("expected 2 or " + std::to_string(box_fields) + " fields, got " +
                           std::to_string(f.size()),
                       line_no);
    }
    if (f[0].empty()) throw ParseError("empty video id", line_no);
    FrameKey key{std::string(f[0]), parse_frame_index(f[1], line_no)};
    if (f.size() == 2) {
      d.frame(key);
      continue;
    }

    const auto cls = parse_feature_class(f[2]);
    if (!cls) throw ParseError("unknown class '" + std::string(f[2]) + "'", line_no);

    std::size_t i = 3;
    double score = 1.0;
    if (with_score) {
      score = parse_number(f[i++], "score", line_no);
      if (score < 0.0 || score > 1.0) {
        throw ParseError("score " + std::string(f[3]) + " outside [0, 1]", line_no);
      }
    }
    BoundingBox b;
    b.xmin = parse_number(f[i++], "xmin", line_no);
    b.ymin = parse_number(f[i++], "ymin", line_no);
    b.xmax = parse_number(f[i++], "xmax", line_no);
    b.ymax = parse_number(f[i++], "ymax", line_no);
    if (b.xmin < 0.0 || b.ymin < 0.0) throw ParseError("negative box coordinate", line_no);
    if (!(b.xmax > b.xmin)) throw ParseError("xmax must exceed xmin", line_no);
    if (!(b.ymax > b.ymin)) throw ParseError("ymax must exceed ymin", line_no);
    d.add(key, Detection{b, *cls, score});
  }
  if (in.bad()) throw ParseError("read error");
  return d;
}

void serialize_csv(const Dataset& d, std::ostream& out, bool with_score) {
  std::string buf;
  for (const auto& [key, objects] : d.frames()) {
    const std::string prefix = key.video_id + "," + std::to_string(key.frame_index);
    if (objects.empty()) {
      buf += prefix;
      buf += '\n';
      continue;
    }
    for (const Detection& o : objects) {
      buf += prefix;
      buf += ',';
      buf += to_string(o.feature);
      if (with_score) {
        buf += ',';
        append_number(buf, o.score);
      }
      for (double v : {o.box.xmin, o.box.ymin, o.box.xmax, o.box.ymax}) {
        buf += ',';
        append_number(buf, v);
      }
      buf += '\n';
    }
  }
  out << buf;
}

std::string stratum_of(const Dataset& d, const FrameKey& key, StratifyBy by) {
  if (by == StratifyBy::Video) return key.video_id;
  const auto it = d.videos().find(key.video_id);
  if (it == d.videos().end() || !it->second.condition) return {};
  return std::string(to_string(*it->second.condition));
}

void copy_frame(const Dataset& from, const FrameKey& key, Dataset& to) {
  const auto* objects = from.find(key);
  to.frame(key) = *objects;
  to.video(key.video_id) = from.videos().at(key.video_id);
}

}  // namespace

std::string_view to_string(ConditionClass c) noexcept {
  return kConditionTokens[static_cast<std::size_t>(c)];
}

std::optional<ConditionClass> parse_condition(std::string_view token) noexcept {
  for (ConditionClass c : kAllConditions) {
    if (to_string(c) == token) return c;
  }
  return std::nullopt;
}

std::vector<Detection>& Dataset::frame(const FrameKey& key) {
  videos_.try_emplace(key.video_id);
  return frames_[key];
}

void Dataset::add(const FrameKey& key, Detection object) {
  if (kind_ == DatasetKind::GroundTruth) object.score = 1.0;
  frame(key).push_back(object);
}

void Dataset::add(const FrameKey& key, const GroundTruthBox& object) {
  add(key, Detection{object.box, object.feature, 1.0});
}

const std::vector<Detection>* Dataset::find(const FrameKey& key) const {
  const auto it = frames_.find(key);
  return it == frames_.end() ? nullptr : &it->second;
}

void Dataset::merge_metadata(const VideoMap& manifest) {
  for (const auto& [id, meta] : manifest) videos_[id] = meta;
}

std::size_t Dataset::object_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [key, objects] : frames_) n += objects.size();
  return n;
}

std::vector<GroundTruthBox> ground_truth_boxes(const std::vector<Detection>& objects) {
  std::vector<GroundTruthBox> out;
  out.reserve(objects.size());
  for (const auto& o : objects) out.push_back({o.box, o.feature});
  return out;
}

Dataset parse_ground_truth(std::istream& in) { return parse_csv(in, DatasetKind::GroundTruth); }
Dataset parse_predictions(std::istream& in) { return parse_csv(in, DatasetKind::Predictions); }

void serialize_ground_truth(const Dataset& d, std::ostream& out) { serialize_csv(d, out, false); }
void serialize_predictions(const Dataset& d, std::ostream& out) { serialize_csv(d, out, true); }

std::string to_csv(const Dataset& d) {
  std::ostringstream out;
  serialize_csv(d, out, d.kind() == DatasetKind::Predictions);
  return out.str();
}

Dataset::VideoMap parse_manifest(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("videos") || !doc["videos"].is_object()) {
    throw ParseError("manifest: expected an object with a \"videos\" object");
  }
  Dataset::VideoMap videos;
  for (const auto& [id, entry] : doc["videos"].items()) {
    if (!entry.is_object()) throw ParseError("manifest: video '" + id + "' must be an object");
    VideoMetadata meta;
    if (auto it = entry.find("condition"); it != entry.end() && !it->is_null()) {
      if (!it->is_string()) throw ParseError("manifest: condition of '" + id + "' must be a string");
      meta.condition = parse_condition(it->get<std::string>());
      if (!meta.condition) {
        throw ParseError("manifest: unknown condition '" + it->get<std::string>() + "'");
      }
    }
    if (auto it = entry.find("age_hours"); it != entry.end() && !it->is_null()) {
      if (!it->is_number() || it->get<double>() < 0.0) {
        throw ParseError("manifest: age_hours of '" + id + "' must be a non-negative number");
      }
      meta.age_hours = it->get<double>();
    }
    if (auto it = entry.find("frame_rate"); it != entry.end() && !it->is_null()) {
      if (!it->is_number() || !(it->get<double>() > 0.0)) {
        throw ParseError("manifest: frame_rate of '" + id + "' must be positive");
      }
      meta.frame_rate = it->get<double>();
    }
    videos.emplace(id, meta);
  }
  return videos;
}

std::string serialize_manifest(const Dataset::VideoMap& videos) {
  nlohmann::ordered_json doc;
  doc["videos"] = nlohmann::ordered_json::object();
  for (const auto& [id, meta] : videos) {
    nlohmann::ordered_json entry = nlohmann::ordered_json::object();
    if (meta.condition) entry["condition"] = std::string(to_string(*meta.condition));
    if (meta.age_hours) entry["age_hours"] = *meta.age_hours;
    entry["frame_rate"] = meta.frame_rate;
    doc["videos"][id] = entry;
  }
  return doc.dump(2) + "\n";
}

std::int64_t ClassCounts::total() const noexcept {
  std::int64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

ClassCounts& ClassCounts::operator+=(const ClassCounts& other) noexcept {
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
  return *this;
}

DatasetStats dataset_stats(const Dataset& d) {
  DatasetStats s;
  for (const auto& [key, objects] : d.frames()) {
    ++s.frames_per_video[key.video_id];
    ++s.frame_count;
    for (const auto& o : objects) ++s.class_counts[o.feature];
  }
  return s;
}

ClassCounts reference_class_counts() noexcept {
  ClassCounts c;
  c[FeatureClass::ALines] = 1114;
  c[FeatureClass::NormalPleura] = 374;
  c[FeatureClass::IrregularPleura] = 216;
  c[FeatureClass::ThickPleura] = 269;
  c[FeatureClass::CoalescentBLines] = 236;
  c[FeatureClass::SeparateBLines] = 75;
  c[FeatureClass::Consolidation] = 227;
  return c;
}

DatasetSplit split_dataset(const Dataset& d, double test_fraction, std::uint64_t seed,
                           StratifyBy stratify_by) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw PreconditionError("test fraction must lie in (0, 1)");
  }
  std::map<std::string, std::vector<FrameKey>> strata;
  for (const auto& [key, objects] : d.frames()) {
    strata[stratum_of(d, key, stratify_by)].push_back(key);
  }

  DatasetSplit out{Dataset(d.kind()), Dataset(d.kind())};
  Rng rng(seed);
  for (auto& [name, keys] : strata) {
    const auto n = static_cast<std::int64_t>(keys.size());
    if (n < 2) {
      throw PreconditionError("stratum '" + (name.empty() ? std::string("<none>") : name) +
                              "' has " + std::to_string(n) + " frame(s); need at least 2 to split");
    }
    const std::int64_t n_test =
        std::clamp<std::int64_t>(std::llround(test_fraction * static_cast<double>(n)), 1, n - 1);
    for (std::size_t i = keys.size() - 1; i > 0; --i) {
      std::swap(keys[i], keys[rng.below(i + 1)]);
    }
    for (std::int64_t i = 0; i < n; ++i) {
      copy_frame(d, keys[static_cast<std::size_t>(i)], i < n_test ? out.test : out.train);
    }
  }
  return out;
}

std::string serialize_split_manifest(const DatasetSplit& split) {
  nlohmann::ordered_json doc;
  for (const auto& [name, part] : {std::pair{"train", &split.train}, std::pair{"test", &split.test}}) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& [key, objects] : part->frames()) {
      list.push_back(nlohmann::ordered_json::array({key.video_id, key.frame_index}));
    }
    doc[name] = std::move(list);
  }
  return doc.dump(2) + "\n";
}

DatasetSplit load_split_manifest(std::istream& in, const Dataset& d) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("split manifest: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("split manifest: expected an object");

  DatasetSplit out{Dataset(d.kind()), Dataset(d.kind())};
  std::set<FrameKey> seen;
  for (const auto& [name, part] : {std::pair{"train", &out.train}, std::pair{"test", &out.test}}) {
    const auto it = doc.find(name);
    if (it == doc.end() || !it->is_array()) {
      throw ParseError(std::string("split manifest: missing \"") + name + "\" array");
    }
    for (const auto& entry : *it) {
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
          !entry[1].is_number_integer() || entry[1].get<std::int64_t>() < 0) {
        throw ParseError("split manifest: entries must be [video_id, frame_index]");
      }
      FrameKey key{entry[0].get<std::string>(), entry[1].get<std::int64_t>()};
      if (!d.find(key)) {
        throw PreconditionError("split manifest references unknown frame " + key.video_id + "#" +
                                std::to_string(key.frame_index));
      }
      if (!seen.insert(key).second) {
        throw PreconditionError("split manifest lists frame " + key.video_id + "#" +
                                std::to_string(key.frame_index) + " more than once");
      }
      copy_frame(d, key, *part);
    }
  }
  return out;
}

std::array<SplitCount, 5> reference_split_counts() noexcept {
  return {{
      {ConditionClass::RDS, 63, 12},
      {ConditionClass::TTN, 67, 8},
      {ConditionClass::PDA, 65, 10},
      {ConditionClass::CLD, 77, 8},
      {ConditionClass::Normal, 101, 11},
  }};
}

std::vector<std::string> validate_split_counts(const DatasetSplit& split,
                                               std::span<const SplitCount> expected) {
  std::map<ConditionClass, std::pair<std::int64_t, std::int64_t>> actual;
  std::int64_t unlabelled = 0;
  auto tally = [&](const Dataset& part, bool is_test) {
    for (const auto& [key, objects] : part.frames()) {
      const auto it = part.videos().find(key.video_id);
      if (it == part.videos().end() || !it->second.condition) {
        ++unlabelled;
        continue;
      }
      auto& slot = actual[*it->second.condition];
      (is_test ? slot.second : slot.first) += 1;
    }
  };
  tally(split.train, false);
  tally(split.test, true);

  std::vector<std::string> problems;
  if (unlabelled > 0) {
    problems.push_back(std::to_string(unlabelled) + " frame(s) have no condition");
  }
  for (const SplitCount& e : expected) {
    const auto [train, test] = actual[e.condition];
    if (train != e.train || test != e.test) {
      problems.push_back(std::string(to_string(e.condition)) + ": expected " +
                         std::to_string(e.train) + "/" + std::to_string(e.test) + ", got " +
                         std::to_string(train) + "/" + std::to_string(test));
    }
  }
  for (const auto& [cond, counts] : actual) {
    const bool listed = std::any_of(expected.begin(), expected.end(),
                                    [&](const SplitCount& e) { return e.condition == cond; });
    if (!listed) {
      problems.push_back(std::string(to_string(cond)) + ": unexpected condition in split");
    }
  }
  return problems;
}

}  // namespace luskit
