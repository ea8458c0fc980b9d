#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "luskit/geometry.hpp"

namespace luskit {

/// Height:width ratio kept as an exact, unreduced rational so that
/// published ratios such as 26/100 print back verbatim. Equality is by
/// value (cross-multiplication), so 26/100 == 13/50.
struct Ratio {
  std::int64_t height = 1;
  std::int64_t width = 1;

  double value() const noexcept { return static_cast<double>(height) / static_cast<double>(width); }
  std::string to_string() const;

  friend bool operator==(const Ratio& a, const Ratio& b) noexcept {
    return a.height * b.width == b.height * a.width;
  }
};

/// Accepts "h/w" or a bare positive integer "h". Both parts must be positive.
std::optional<Ratio> parse_ratio(std::string_view text) noexcept;

/// Exact height:width of a box whose extents are integral; nullopt otherwise.
std::optional<Ratio> exact_aspect_ratio(const BoundingBox& b) noexcept;

struct FeatureMapShape {
  std::int64_t width = 1;
  std::int64_t height = 1;
  std::int64_t depth = 1;
};

struct AnchorConfig {
  std::vector<double> scales;
  std::vector<Ratio> ratios;
  FeatureMapShape feature_map;
  double stride = 16.0;  // image pixels per feature-map cell

  /// Throws PreconditionError on empty/non-positive scales or ratios,
  /// feature-map dims < 1, or stride <= 0.
  void validate() const;
};

/// Named built-in configurations: "paper-frcnn" (4 scales x 12 ratios) and
/// "paper-retinanet" (3 scales x 12 ratios). The feature map is left at
/// 1x1x1; callers set the shape they need.
AnchorConfig anchor_preset(std::string_view name);
std::vector<std::string_view> anchor_preset_names();

/// The twelve reference ratios, one per annotated box row, in table order.
struct ReferenceAnchorBox {
  FeatureClass feature;
  BoundingBox box;
  Ratio listed_ratio;
};
std::span<const ReferenceAnchorBox> reference_anchor_boxes() noexcept;

/// |scales| * |ratios|.
std::int64_t anchors_per_position(const AnchorConfig& config);

/// width * height * depth * anchors_per_position.
std::int64_t potential_anchor_count(const AnchorConfig& config);

struct Anchor {
  BoundingBox box;
  std::int32_t cell_x = 0;
  std::int32_t cell_y = 0;
  std::int32_t depth_index = 0;
  std::int32_t scale_index = 0;
  std::int32_t ratio_index = 0;
};

struct AnchorGrid {
  std::vector<Anchor> anchors;
  double image_width = 0.0;
  double image_height = 0.0;
};

/// One anchor per (depth slice, cell, scale, ratio), ordered depth-major,
/// then row-major by cell, then scale, then ratio. Each anchor is centred at
/// ((x + 0.5) * stride, (y + 0.5) * stride) with width s / sqrt(r) and
/// height s * sqrt(r). Anchors crossing the image border are kept.
AnchorGrid generate_anchors(const AnchorConfig& config, double image_width, double image_height);

/// True when the box lies entirely within [0, width] x [0, height].
bool in_image(const BoundingBox& b, double image_width, double image_height) noexcept;

/// Foreground carries the index of the best-overlapping ground-truth box.
struct AnchorLabel {
  std::optional<std::size_t> gt_index;

  bool is_foreground() const noexcept { return gt_index.has_value(); }
  friend bool operator==(const AnchorLabel&, const AnchorLabel&) = default;
};

/// Foreground when the best IoU is strictly above `fg_threshold`. A
/// threshold of exactly 1.0 admits exact matches only. IoU ties go to the
/// lowest ground-truth index.
std::vector<AnchorLabel> label_anchors(const AnchorGrid& grid, std::span<const GroundTruthBox> gt,
                                       double fg_threshold = 0.5);

struct BoxOffsets {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;
};

/// Centre shift relative to anchor size and log size ratio.
BoxOffsets encode_offsets(const BoundingBox& anchor, const BoundingBox& gt);
BoundingBox decode_offsets(const BoundingBox& anchor, const BoxOffsets& offsets);

}  // namespace luskit
