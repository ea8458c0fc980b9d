#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "luskit/geometry.hpp"

namespace luskit {

enum class ConditionClass : std::uint8_t { Normal, RDS, TTN, PDA, CLD };

inline constexpr std::array<ConditionClass, 5> kAllConditions = {
    ConditionClass::Normal, ConditionClass::RDS, ConditionClass::TTN, ConditionClass::PDA,
    ConditionClass::CLD,
};

std::string_view to_string(ConditionClass c) noexcept;
std::optional<ConditionClass> parse_condition(std::string_view token) noexcept;

struct FrameKey {
  std::string video_id;
  std::int64_t frame_index = 0;

  friend auto operator<=>(const FrameKey&, const FrameKey&) = default;
  friend bool operator==(const FrameKey&, const FrameKey&) = default;
};

struct VideoMetadata {
  std::optional<ConditionClass> condition;
  std::optional<double> age_hours;
  double frame_rate = 18.0;

  friend bool operator==(const VideoMetadata&, const VideoMetadata&) = default;
};

enum class DatasetKind : std::uint8_t { GroundTruth, Predictions };

/// Frame-indexed boxes plus per-video metadata.
///
/// Frames are kept ordered by (video_id, frame_index), which is also the
/// canonical serialization order. Ground-truth objects carry score 1.
/// A frame may be present with no objects. Every frame's video has an
/// entry in videos(), created with default metadata if necessary.
class Dataset {
 public:
  using FrameMap = std::map<FrameKey, std::vector<Detection>>;
  using VideoMap = std::map<std::string, VideoMetadata>;

  explicit Dataset(DatasetKind kind = DatasetKind::GroundTruth) : kind_(kind) {}

  DatasetKind kind() const noexcept { return kind_; }

  /// Declares a frame (possibly empty) and returns its object list.
  std::vector<Detection>& frame(const FrameKey& key);

  /// Appends one object. Ground-truth datasets force the score to 1.
  void add(const FrameKey& key, Detection object);
  void add(const FrameKey& key, const GroundTruthBox& object);

  const FrameMap& frames() const noexcept { return frames_; }
  const std::vector<Detection>* find(const FrameKey& key) const;

  const VideoMap& videos() const noexcept { return videos_; }
  VideoMetadata& video(const std::string& video_id) { return videos_[video_id]; }

  /// Overwrites metadata for every listed video (declaring it if new).
  void merge_metadata(const VideoMap& manifest);

  std::size_t frame_count() const noexcept { return frames_.size(); }
  std::size_t object_count() const noexcept;
  bool empty() const noexcept { return frames_.empty(); }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  DatasetKind kind_;
  FrameMap frames_;
  VideoMap videos_;
};

std::vector<GroundTruthBox> ground_truth_boxes(const std::vector<Detection>& objects);

// ---- CSV formats ---------------------------------------------------------
//
// One object per line, comma separated, no quoting:
//   ground truth: video_id,frame_index,class,xmin,ymin,xmax,ymax
//   predictions:  video_id,frame_index,class,score,xmin,ymin,xmax,ymax
//   either:       video_id,frame_index          (frame with no objects)
// Blank lines and lines whose first character is '#' are ignored. A
// trailing '\r' is stripped. Class tokens are case-sensitive.

Dataset parse_ground_truth(std::istream& in);
Dataset parse_predictions(std::istream& in);

/// Canonical text: frames in key order, objects in stored order, numbers in
/// shortest round-trip form. parse(serialize(d)) reproduces d's frames.
void serialize_ground_truth(const Dataset& d, std::ostream& out);
void serialize_predictions(const Dataset& d, std::ostream& out);
std::string to_csv(const Dataset& d);

// ---- Manifest ------------------------------------------------------------
//
// {"videos": {"<id>": {"condition": "RDS", "age_hours": 6, "frame_rate": 18}}}
// All per-video fields are optional.

Dataset::VideoMap parse_manifest(std::istream& in);
std::string serialize_manifest(const Dataset::VideoMap& videos);

// ---- Statistics ----------------------------------------------------------

struct ClassCounts {
  std::array<std::int64_t, kFeatureClassCount> counts{};

  std::int64_t& operator[](FeatureClass c) noexcept { return counts[index_of(c)]; }
  std::int64_t operator[](FeatureClass c) const noexcept { return counts[index_of(c)]; }
  std::int64_t total() const noexcept;

  ClassCounts& operator+=(const ClassCounts& other) noexcept;
  friend ClassCounts operator+(ClassCounts a, const ClassCounts& b) noexcept { return a += b; }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct DatasetStats {
  ClassCounts class_counts;
  std::map<std::string, std::int64_t> frames_per_video;
  std::int64_t frame_count = 0;
};

DatasetStats dataset_stats(const Dataset& d);

/// Class totals of the annotated reference corpus (1114 A-lines, ...).
ClassCounts reference_class_counts() noexcept;

// ---- Splitting -----------------------------------------------------------

enum class StratifyBy : std::uint8_t { Condition, Video };

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

/// Deterministic stratified split. Each stratum (condition, or video) of n
/// frames sends clamp(round(test_fraction * n), 1, n - 1) frames to test.
/// Frames whose video has no condition form their own stratum. Throws
/// PreconditionError if a stratum has fewer than two frames.
DatasetSplit split_dataset(const Dataset& d, double test_fraction, std::uint64_t seed,
                           StratifyBy stratify_by);

/// {"train": [["vid", 3], ...], "test": [...]}
std::string serialize_split_manifest(const DatasetSplit& split);

/// Rebuilds a split from a manifest. Throws ParseError on bad JSON and
/// PreconditionError on unknown or overlapping frames.
DatasetSplit load_split_manifest(std::istream& in, const Dataset& d);

struct SplitCount {
  ConditionClass condition;
  std::int64_t train = 0;
  std::int64_t test = 0;
};

/// Per-condition train/test frame counts of the reference study.
std::array<SplitCount, 5> reference_split_counts() noexcept;

/// Human-readable mismatches between a split's per-condition frame counts
/// and `expected`; empty when they agree.
std::vector<std::string> validate_split_counts(const DatasetSplit& split,
                                               std::span<const SplitCount> expected);

}  // namespace luskit
