#include "luskit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "luskit/errors.hpp"

namespace luskit {

namespace {

constexpr std::array<std::string_view, kFeatureClassCount> kFeatureTokens = {
    "ALines",           "NormalPleura",   "ThickPleura",   "IrregularPleura",
    "CoalescentBLines", "SeparateBLines", "Consolidation",
};

}  // namespace

std::string_view to_string(FeatureClass c) noexcept { return kFeatureTokens[index_of(c)]; }

std::optional<FeatureClass> parse_feature_class(std::string_view token) noexcept {
  for (FeatureClass c : kAllFeatureClasses) {
    if (kFeatureTokens[index_of(c)] == token) return c;
  }
  return std::nullopt;
}

bool is_valid(const BoundingBox& b) noexcept {
  return std::isfinite(b.xmin) && std::isfinite(b.ymin) && std::isfinite(b.xmax) &&
         std::isfinite(b.ymax) && b.xmax > b.xmin && b.ymax > b.ymin;
}

bool is_valid_image_box(const BoundingBox& b) noexcept {
  return is_valid(b) && b.xmin >= 0.0 && b.ymin >= 0.0;
}

double area(const BoundingBox& b) noexcept { return b.width() * b.height(); }

double intersection_area(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double w = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double h = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = area(a) + area(b) - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double aspect_ratio(const BoundingBox& b) noexcept { return b.height() / b.width(); }

std::vector<Detection> nms(std::span<const Detection> detections, double score_thresh,
                           double nms_iou) {
  if (!(score_thresh >= 0.0 && score_thresh <= 1.0) || !(nms_iou >= 0.0 && nms_iou <= 1.0)) {
    throw PreconditionError("nms thresholds must lie in [0, 1]");
  }

  std::vector<std::size_t> order;
  order.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].score >= score_thresh) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });

  std::vector<Detection> kept;
  std::array<std::vector<std::size_t>, kFeatureClassCount> kept_by_class;
  for (std::size_t idx : order) {
    const Detection& d = detections[idx];
    auto& same_class = kept_by_class[index_of(d.feature)];
    const bool suppressed = std::any_of(same_class.begin(), same_class.end(), [&](std::size_t k) {
      return iou(kept[k].box, d.box) > nms_iou;
    });
    if (suppressed) continue;
    same_class.push_back(kept.size());
    kept.push_back(d);
  }
  return kept;
}

}  // namespace luskit
