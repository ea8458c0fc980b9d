#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace luskit {

/// The seven lung-ultrasound features a detector reports.
enum class FeatureClass : std::uint8_t {
  ALines,
  NormalPleura,
  ThickPleura,
  IrregularPleura,
  CoalescentBLines,
  SeparateBLines,
  Consolidation,
};

inline constexpr std::size_t kFeatureClassCount = 7;

inline constexpr std::array<FeatureClass, kFeatureClassCount> kAllFeatureClasses = {
    FeatureClass::ALines,          FeatureClass::NormalPleura,     FeatureClass::ThickPleura,
    FeatureClass::IrregularPleura, FeatureClass::CoalescentBLines, FeatureClass::SeparateBLines,
    FeatureClass::Consolidation,
};

constexpr std::size_t index_of(FeatureClass c) noexcept { return static_cast<std::size_t>(c); }

/// Exact interchange token, e.g. "ALines".
std::string_view to_string(FeatureClass c) noexcept;

/// Case-sensitive inverse of to_string; nullopt for anything else.
std::optional<FeatureClass> parse_feature_class(std::string_view token) noexcept;

/// Axis-aligned box in continuous pixel coordinates (x right, y down).
///
/// Extents use the open-interval convention: width is xmax - xmin with no
/// +1 pixel correction. The struct itself does not enforce validity, since
/// anchors and decoded boxes may legitimately sit partly outside the image;
/// use is_valid() / is_valid_image_box() at ingestion boundaries.
struct BoundingBox {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  constexpr double width() const noexcept { return xmax - xmin; }
  constexpr double height() const noexcept { return ymax - ymin; }
  constexpr double center_x() const noexcept { return 0.5 * (xmin + xmax); }
  constexpr double center_y() const noexcept { return 0.5 * (ymin + ymax); }

  friend constexpr bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Finite coordinates and strictly positive width and height.
bool is_valid(const BoundingBox& b) noexcept;

/// is_valid() plus all coordinates >= 0.
bool is_valid_image_box(const BoundingBox& b) noexcept;

double area(const BoundingBox& b) noexcept;

/// Area of the intersection; 0 when the boxes do not overlap.
double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Intersection over union. Symmetric, in [0, 1], 0 for disjoint boxes.
double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

/// Height over width.
double aspect_ratio(const BoundingBox& b) noexcept;

struct Detection {
  BoundingBox box;
  FeatureClass feature = FeatureClass::ALines;
  double score = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// A labelled ground-truth box.
struct GroundTruthBox {
  BoundingBox box;
  FeatureClass feature = FeatureClass::ALines;

  friend bool operator==(const GroundTruthBox&, const GroundTruthBox&) = default;
};

/// Per-class greedy non-maximum suppression.
///
/// Detections scoring below `score_thresh` are discarded first. Within each
/// class the highest-scoring survivor is kept and every remaining detection
/// of that class with IoU strictly greater than `nms_iou` against it is
/// removed. Equal scores keep input order. The result is sorted by
/// descending score (stable with respect to input order).
std::vector<Detection> nms(std::span<const Detection> detections, double score_thresh,
                           double nms_iou);

}  // namespace luskit
