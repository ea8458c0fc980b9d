#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "luskit/annotations.hpp"
#include "luskit/geometry.hpp"

namespace luskit {

/// Features annotated for a condition, in the order frames emit them.
std::vector<FeatureClass> condition_features(ConditionClass c);

/// Uniform ranges for box centre and size, in pixels. Ranges span the
/// annotated reference boxes of the feature, widened by 10% either side.
struct BoxTemplate {
  double cx_lo = 0.0, cx_hi = 0.0;
  double cy_lo = 0.0, cy_hi = 0.0;
  double w_lo = 0.0, w_hi = 0.0;
  double h_lo = 0.0, h_hi = 0.0;
};

BoxTemplate box_template(FeatureClass c);

struct ScenarioProfile {
  ConditionClass condition = ConditionClass::Normal;
  std::int64_t frames = 10;
  double image_width = 512.0;
  double image_height = 512.0;
  std::string video_id;              // defaults to "synth-<condition>"
  std::optional<double> age_hours;   // written to the manifest when set

  void validate() const;  // frames >= 1, image dims positive
};

/// Profile with a plausible default age for the condition.
ScenarioProfile scenario_profile(ConditionClass c, std::int64_t frames);

struct GeneratedScenario {
  Dataset ground_truth;
  ClassCounts emitted;  // per-class boxes written by the generator
};

/// Deterministic for (profile, seed). Frame i draws from its own stream
/// derive_seed(seed, i). Every frame carries each feature of the condition
/// once, except that A-lines may repeat (two equally spaced bands) and the
/// RDS pleura is thick, irregular, or both. Boxes stay inside the image.
GeneratedScenario generate_ground_truth(const ScenarioProfile& profile, std::uint64_t seed);

struct PerturbationConfig {
  double jitter_sigma = 0.0;  // pixels, Gaussian translation per box
  double drop_rate = 0.0;     // probability a ground-truth box is missed
  double spurious_rate = 0.0; // probability a frame gains one false detection
  double score_mean_tp = 0.9;
  double score_mean_fp = 0.3;
  double score_sigma = 0.05;  // spread of both score models; clamped to [0, 1]
  std::uint64_t seed = 0;
  double image_width = 512.0;
  double image_height = 512.0;

  void validate() const;
};

struct PerturbationLedger {
  std::int64_t kept = 0;
  std::int64_t dropped = 0;
  std::int64_t spurious = 0;
  ClassCounts kept_by_class;
};

struct PerturbedPredictions {
  Dataset predictions;
  PerturbationLedger ledger;
};

/// Turns ground truth into predictions. Every ground-truth frame appears in
/// the output, possibly empty, with the same metadata.
PerturbedPredictions perturb(const Dataset& gt, const PerturbationConfig& cfg);

}  // namespace luskit
