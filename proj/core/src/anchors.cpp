#include "luskit/anchors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>

#include "luskit/errors.hpp"

namespace luskit {

namespace {

std::optional<std::int64_t> parse_positive_int(std::string_view s) noexcept {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v <= 0) return std::nullopt;
  return v;
}

// Table of annotated reference boxes and the ratio listed beside each.
// Listed ratios are stored verbatim, even where they disagree with the
// coordinates (irregular pleura, first row).
constexpr std::array<ReferenceAnchorBox, 12> kReferenceBoxes = {{
    {FeatureClass::ALines, {49, 149, 168, 180}, {31, 119}},
    {FeatureClass::NormalPleura, {53, 60, 174, 88}, {28, 121}},
    {FeatureClass::NormalPleura, {38, 71, 138, 97}, {26, 100}},
    {FeatureClass::ThickPleura, {416, 94, 484, 121}, {27, 68}},
    {FeatureClass::IrregularPleura, {191, 53, 365, 80}, {27, 175}},
    {FeatureClass::IrregularPleura, {182, 46, 441, 72}, {26, 259}},
    {FeatureClass::SeparateBLines, {269, 82, 444, 450}, {368, 175}},
    {FeatureClass::CoalescentBLines, {26, 313, 468, 466}, {153, 442}},
    {FeatureClass::CoalescentBLines, {108, 201, 410, 325}, {124, 302}},
    {FeatureClass::Consolidation, {214, 79, 433, 156}, {77, 219}},
    {FeatureClass::Consolidation, {6, 114, 308, 247}, {133, 302}},
    {FeatureClass::Consolidation, {190, 84, 363, 155}, {71, 173}},
}};

std::vector<Ratio> reference_ratios() {
  std::vector<Ratio> out;
  out.reserve(kReferenceBoxes.size());
  for (const auto& r : kReferenceBoxes) out.push_back(r.listed_ratio);
  return out;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw PreconditionError("anchor count overflows 64 bits");
  return out;
}

}  // namespace

std::string Ratio::to_string() const {
  return std::to_string(height) + "/" + std::to_string(width);
}

std::optional<Ratio> parse_ratio(std::string_view text) noexcept {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    const auto h = parse_positive_int(text);
    if (!h) return std::nullopt;
    return Ratio{*h, 1};
  }
  const auto h = parse_positive_int(text.substr(0, slash));
  const auto w = parse_positive_int(text.substr(slash + 1));
  if (!h || !w) return std::nullopt;
  return Ratio{*h, *w};
}

std::optional<Ratio> exact_aspect_ratio(const BoundingBox& b) noexcept {
  if (!is_valid(b)) return std::nullopt;
  const double h = b.height();
  const double w = b.width();
  constexpr double kMax = 9.0e15;
  if (h != std::floor(h) || w != std::floor(w) || h > kMax || w > kMax) return std::nullopt;
  return Ratio{static_cast<std::int64_t>(h), static_cast<std::int64_t>(w)};
}

void AnchorConfig::validate() const {
  if (scales.empty()) throw PreconditionError("anchor config needs at least one scale");
  if (ratios.empty()) throw PreconditionError("anchor config needs at least one ratio");
  for (double s : scales) {
    if (!(s > 0.0) || !std::isfinite(s)) throw PreconditionError("anchor scales must be positive");
  }
  for (const Ratio& r : ratios) {
    if (r.height <= 0 || r.width <= 0) throw PreconditionError("anchor ratios must be positive");
  }
  if (feature_map.width < 1 || feature_map.height < 1 || feature_map.depth < 1) {
    throw PreconditionError("feature-map dimensions must be >= 1");
  }
  if (!(stride > 0.0) || !std::isfinite(stride)) {
    throw PreconditionError("anchor stride must be positive");
  }
}

AnchorConfig anchor_preset(std::string_view name) {
  AnchorConfig config;
  if (name == "paper-frcnn") {
    config.scales = {128, 256, 64, 32};
  } else if (name == "paper-retinanet") {
    // Stored verbatim; these read as size multipliers rather than pixels.
    config.scales = {0.25, 2, 5};
  } else {
    throw PreconditionError("unknown anchor preset '" + std::string(name) + "'");
  }
  config.ratios = reference_ratios();
  return config;
}

std::vector<std::string_view> anchor_preset_names() { return {"paper-frcnn", "paper-retinanet"}; }

std::span<const ReferenceAnchorBox> reference_anchor_boxes() noexcept { return kReferenceBoxes; }

std::int64_t anchors_per_position(const AnchorConfig& config) {
  config.validate();
  return checked_mul(static_cast<std::int64_t>(config.scales.size()),
                     static_cast<std::int64_t>(config.ratios.size()));
}

std::int64_t potential_anchor_count(const AnchorConfig& config) {
  const std::int64_t k = anchors_per_position(config);
  const auto& fm = config.feature_map;
  return checked_mul(checked_mul(checked_mul(fm.width, fm.height), fm.depth), k);
}

AnchorGrid generate_anchors(const AnchorConfig& config, double image_width, double image_height) {
  const std::int64_t total = potential_anchor_count(config);
  if (!(image_width > 0.0) || !(image_height > 0.0)) {
    throw PreconditionError("image dimensions must be positive");
  }
  constexpr auto kIndexMax = std::numeric_limits<std::int32_t>::max();
  const auto& fm = config.feature_map;
  if (fm.width > kIndexMax || fm.height > kIndexMax || fm.depth > kIndexMax) {
    throw PreconditionError("feature map too large");
  }

  // Per-(scale, ratio) half extents do not depend on the cell.
  struct Shape {
    double half_w;
    double half_h;
  };
  std::vector<Shape> shapes;
  shapes.reserve(config.scales.size() * config.ratios.size());
  for (double s : config.scales) {
    for (const Ratio& r : config.ratios) {
      const double root = std::sqrt(r.value());
      shapes.push_back({0.5 * s / root, 0.5 * s * root});
    }
  }

  AnchorGrid grid;
  grid.image_width = image_width;
  grid.image_height = image_height;
  grid.anchors.reserve(static_cast<std::size_t>(total));
  const auto n_ratios = static_cast<std::int32_t>(config.ratios.size());
  for (std::int32_t d = 0; d < fm.depth; ++d) {
    for (std::int32_t y = 0; y < fm.height; ++y) {
      const double cy = (y + 0.5) * config.stride;
      for (std::int32_t x = 0; x < fm.width; ++x) {
        const double cx = (x + 0.5) * config.stride;
        for (std::size_t i = 0; i < shapes.size(); ++i) {
          const Shape& sh = shapes[i];
          Anchor a;
          a.box = {cx - sh.half_w, cy - sh.half_h, cx + sh.half_w, cy + sh.half_h};
          a.cell_x = x;
          a.cell_y = y;
          a.depth_index = d;
          a.scale_index = static_cast<std::int32_t>(i) / n_ratios;
          a.ratio_index = static_cast<std::int32_t>(i) % n_ratios;
          grid.anchors.push_back(a);
        }
      }
    }
  }
  return grid;
}

bool in_image(const BoundingBox& b, double image_width, double image_height) noexcept {
  return b.xmin >= 0.0 && b.ymin >= 0.0 && b.xmax <= image_width && b.ymax <= image_height;
}

std::vector<AnchorLabel> label_anchors(const AnchorGrid& grid, std::span<const GroundTruthBox> gt,
                                       double fg_threshold) {
  if (!(fg_threshold > 0.0 && fg_threshold <= 1.0)) {
    throw PreconditionError("foreground threshold must lie in (0, 1]");
  }
  std::vector<AnchorLabel> labels(grid.anchors.size());
  for (std::size_t a = 0; a < grid.anchors.size(); ++a) {
    double best = 0.0;
    std::optional<std::size_t> best_index;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      const double v = iou(grid.anchors[a].box, gt[g].box);
      if (!best_index || v > best) {
        best = v;
        best_index = g;
      }
    }
    if (!best_index) continue;
    const bool foreground = fg_threshold >= 1.0 ? best >= 1.0 : best > fg_threshold;
    if (foreground) labels[a].gt_index = best_index;
  }
  return labels;
}

BoxOffsets encode_offsets(const BoundingBox& anchor, const BoundingBox& gt) {
  if (!is_valid(anchor) || !is_valid(gt)) throw PreconditionError("encode_offsets needs valid boxes");
  const double aw = anchor.width();
  const double ah = anchor.height();
  return {
      (gt.center_x() - anchor.center_x()) / aw,
      (gt.center_y() - anchor.center_y()) / ah,
      std::log(gt.width() / aw),
      std::log(gt.height() / ah),
  };
}

BoundingBox decode_offsets(const BoundingBox& anchor, const BoxOffsets& off) {
  if (!is_valid(anchor)) throw PreconditionError("decode_offsets needs a valid anchor");
  if (!std::isfinite(off.tx) || !std::isfinite(off.ty) || !std::isfinite(off.tw) ||
      !std::isfinite(off.th)) {
    throw PreconditionError("decode_offsets needs finite offsets");
  }
  const double aw = anchor.width();
  const double ah = anchor.height();
  const double cx = anchor.center_x() + off.tx * aw;
  const double cy = anchor.center_y() + off.ty * ah;
  const double w = aw * std::exp(off.tw);
  const double h = ah * std::exp(off.th);
  return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

}  // namespace luskit
