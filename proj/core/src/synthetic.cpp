#include "luskit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "luskit/anchors.hpp"
#include "luskit/errors.hpp"
#include "luskit/random.hpp"

namespace luskit {

namespace {

BoundingBox place(double cx, double cy, double w, double h, double img_w, double img_h) {
  w = std::min(w, img_w);
  h = std::min(h, img_h);
  cx = std::clamp(cx, 0.5 * w, img_w - 0.5 * w);
  cy = std::clamp(cy, 0.5 * h, img_h - 0.5 * h);
  return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

BoundingBox sample_box(FeatureClass c, Rng& rng, double img_w, double img_h) {
  const BoxTemplate t = box_template(c);
  const double cx = rng.uniform(t.cx_lo, t.cx_hi);
  const double cy = rng.uniform(t.cy_lo, t.cy_hi);
  const double w = rng.uniform(t.w_lo, t.w_hi);
  const double h = rng.uniform(t.h_lo, t.h_hi);
  return place(cx, cy, w, h, img_w, img_h);
}

double sample_score(Rng& rng, double mean, double sigma) {
  return std::clamp(rng.normal(mean, sigma), 0.0, 1.0);
}

}  // namespace

std::vector<FeatureClass> condition_features(ConditionClass c) {
  using F = FeatureClass;
  switch (c) {
    case ConditionClass::Normal: return {F::ALines, F::NormalPleura};
    case ConditionClass::TTN: return {F::SeparateBLines, F::NormalPleura};
    case ConditionClass::RDS: return {F::ThickPleura, F::IrregularPleura, F::Consolidation, F::CoalescentBLines};
    case ConditionClass::CLD: return {F::IrregularPleura, F::ThickPleura, F::Consolidation, F::CoalescentBLines};
    case ConditionClass::PDA: return {F::NormalPleura, F::Consolidation, F::CoalescentBLines};
  }
  return {};
}

BoxTemplate box_template(FeatureClass c) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  BoxTemplate t{kInf, -kInf, kInf, -kInf, kInf, -kInf, kInf, -kInf};
  auto widen = [](double& lo, double& hi, double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  };
  for (const ReferenceAnchorBox& r : reference_anchor_boxes()) {
    if (r.feature != c) continue;
    widen(t.cx_lo, t.cx_hi, r.box.center_x());
    widen(t.cy_lo, t.cy_hi, r.box.center_y());
    widen(t.w_lo, t.w_hi, r.box.width());
    widen(t.h_lo, t.h_hi, r.box.height());
  }
  for (auto [lo, hi] : {std::pair{&t.cx_lo, &t.cx_hi}, std::pair{&t.cy_lo, &t.cy_hi},
                        std::pair{&t.w_lo, &t.w_hi}, std::pair{&t.h_lo, &t.h_hi}}) {
    *lo *= 0.9;
    *hi *= 1.1;
  }
  return t;
}

void ScenarioProfile::validate() const {
  if (frames < 1) throw PreconditionError("scenario needs at least one frame");
  if (!(image_width > 0.0) || !(image_height > 0.0)) {
    throw PreconditionError("scenario image dimensions must be positive");
  }
  if (age_hours && !(*age_hours >= 0.0)) throw PreconditionError("age must be non-negative");
}

ScenarioProfile scenario_profile(ConditionClass c, std::int64_t frames) {
  ScenarioProfile p;
  p.condition = c;
  p.frames = frames;
  p.video_id = "synth-" + std::string(to_string(c));
  switch (c) {
    case ConditionClass::RDS: p.age_hours = 6.0; break;
    case ConditionClass::TTN: p.age_hours = 10.0; break;
    case ConditionClass::Normal: p.age_hours = 48.0; break;
    case ConditionClass::CLD:
    case ConditionClass::PDA: p.age_hours = 72.0; break;
  }
  return p;
}

GeneratedScenario generate_ground_truth(const ScenarioProfile& profile, std::uint64_t seed) {
  profile.validate();
  const std::string video =
      profile.video_id.empty() ? "synth-" + std::string(to_string(profile.condition)) : profile.video_id;
  const auto features = condition_features(profile.condition);
  const double img_w = profile.image_width;
  const double img_h = profile.image_height;

  GeneratedScenario out;
  VideoMetadata& meta = out.ground_truth.video(video);
  meta.condition = profile.condition;
  meta.age_hours = profile.age_hours;

  for (std::int64_t i = 0; i < profile.frames; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const FrameKey key{video, i};
    auto emit = [&](FeatureClass c, const BoundingBox& b) {
      out.ground_truth.add(key, GroundTruthBox{b, c});
      ++out.emitted[c];
    };

    // RDS pleura: 0 = thick, 1 = irregular, 2 = both.
    const std::uint64_t rds_pleura = profile.condition == ConditionClass::RDS ? rng.below(3) : 2;
    for (FeatureClass c : features) {
      if (c == FeatureClass::ThickPleura && rds_pleura == 1) continue;
      if (c == FeatureClass::IrregularPleura && rds_pleura == 0) continue;

      const BoundingBox first = sample_box(c, rng, img_w, img_h);
      emit(c, first);
      if (c == FeatureClass::ALines && rng.bernoulli(0.5)) {
        // A repeat reverberation one band-spacing lower, never overlapping.
        const double spacing = first.height() * rng.uniform(2.0, 3.0);
        BoundingBox second = first;
        second.ymin += spacing;
        second.ymax += spacing;
        if (second.ymax <= img_h) emit(c, second);
      }
    }
  }
  return out;
}

void PerturbationConfig::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!(jitter_sigma >= 0.0) || !std::isfinite(jitter_sigma)) {
    throw PreconditionError("jitter sigma must be non-negative");
  }
  if (!in_unit(drop_rate) || !in_unit(spurious_rate)) {
    throw PreconditionError("drop and spurious rates must lie in [0, 1]");
  }
  if (!(score_mean_tp > 0.0 && score_mean_tp <= 1.0) || !(score_mean_fp > 0.0 && score_mean_fp <= 1.0)) {
    throw PreconditionError("score means must lie in (0, 1]");
  }
  if (!(score_sigma >= 0.0) || !std::isfinite(score_sigma)) {
    throw PreconditionError("score sigma must be non-negative");
  }
  if (!(image_width > 0.0) || !(image_height > 0.0)) {
    throw PreconditionError("image dimensions must be positive");
  }
}

PerturbedPredictions perturb(const Dataset& gt, const PerturbationConfig& cfg) {
  cfg.validate();
  PerturbedPredictions out{Dataset(DatasetKind::Predictions), {}};
  out.predictions.merge_metadata(gt.videos());

  std::uint64_t ordinal = 0;
  for (const auto& [key, objects] : gt.frames()) {
    Rng rng(derive_seed(cfg.seed, ordinal++));
    auto& preds = out.predictions.frame(key);
    for (const Detection& o : objects) {
      if (rng.bernoulli(cfg.drop_rate)) {
        ++out.ledger.dropped;
        continue;
      }
      BoundingBox b = o.box;
      if (cfg.jitter_sigma > 0.0) {
        const double dx = rng.normal(0.0, cfg.jitter_sigma);
        const double dy = rng.normal(0.0, cfg.jitter_sigma);
        b = place(b.center_x() + dx, b.center_y() + dy, b.width(), b.height(), cfg.image_width,
                  cfg.image_height);
      }
      const double score =
          cfg.score_sigma > 0.0 ? sample_score(rng, cfg.score_mean_tp, cfg.score_sigma) : cfg.score_mean_tp;
      preds.push_back({b, o.feature, score});
      ++out.ledger.kept;
      ++out.ledger.kept_by_class[o.feature];
    }
    if (rng.bernoulli(cfg.spurious_rate)) {
      const auto c = kAllFeatureClasses[rng.below(kFeatureClassCount)];
      const BoundingBox b = sample_box(c, rng, cfg.image_width, cfg.image_height);
      const double score =
          cfg.score_sigma > 0.0 ? sample_score(rng, cfg.score_mean_fp, cfg.score_sigma) : cfg.score_mean_fp;
      preds.push_back({b, c, score});
      ++out.ledger.spurious;
    }
  }
  return out;
}

}  // namespace luskit
