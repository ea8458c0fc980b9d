#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "luskit/errors.hpp"
#include "luskit/evaluation.hpp"
#include "luskit/synthetic.hpp"

using namespace luskit;
using C = ConditionClass;

namespace {

std::set<FeatureClass> classes_in(const Dataset& d) {
  std::set<FeatureClass> out;
  for (const auto& [key, objs] : d.frames()) {
    for (const auto& o : objs) out.insert(o.feature);
  }
  return out;
}

}  // namespace

TEST(ConditionFeatures, MatchRuleRows) {
  using F = FeatureClass;
  EXPECT_EQ(condition_features(C::Normal), (std::vector<F>{F::ALines, F::NormalPleura}));
  EXPECT_EQ(condition_features(C::TTN), (std::vector<F>{F::SeparateBLines, F::NormalPleura}));
  const auto pda_list = condition_features(C::PDA);
  const std::set<F> pda(pda_list.begin(), pda_list.end());
  EXPECT_EQ(pda, (std::set<F>{F::NormalPleura, F::Consolidation, F::CoalescentBLines}));
}

TEST(GenerateGroundTruth, NormalOnlyHasItsFeatures) {
  const auto g = generate_ground_truth(scenario_profile(C::Normal, 50), 1);
  EXPECT_EQ(classes_in(g.ground_truth), (std::set<FeatureClass>{FeatureClass::ALines, FeatureClass::NormalPleura}));
  EXPECT_EQ(g.ground_truth.frame_count(), 50u);
}

TEST(GenerateGroundTruth, EveryProfileStaysInsideItsFeatureSet) {
  for (C c : kAllConditions) {
    const auto profile = scenario_profile(c, 40);
    const auto g = generate_ground_truth(profile, 77);
    const auto allowed = condition_features(c);
    for (const auto& [key, objs] : g.ground_truth.frames()) {
      EXPECT_EQ(key.video_id, profile.video_id);
      EXPECT_FALSE(objs.empty());
      for (const auto& o : objs) {
        EXPECT_NE(std::find(allowed.begin(), allowed.end(), o.feature), allowed.end());
        EXPECT_TRUE(is_valid_image_box(o.box));
        EXPECT_LE(o.box.xmax, profile.image_width);
        EXPECT_LE(o.box.ymax, profile.image_height);
      }
    }
    const auto& meta = g.ground_truth.videos().at(profile.video_id);
    EXPECT_EQ(meta.condition, c);
    EXPECT_EQ(meta.age_hours, profile.age_hours);
  }
}

TEST(GenerateGroundTruth, RejectsZeroFrames) {
  EXPECT_THROW(generate_ground_truth(scenario_profile(C::TTN, 0), 1), PreconditionError);
}

TEST(GenerateGroundTruth, DeterministicPerSeed) {
  const auto p = scenario_profile(C::RDS, 25);
  EXPECT_EQ(to_csv(generate_ground_truth(p, 3).ground_truth), to_csv(generate_ground_truth(p, 3).ground_truth));
  EXPECT_NE(to_csv(generate_ground_truth(p, 3).ground_truth), to_csv(generate_ground_truth(p, 4).ground_truth));
}

TEST(GenerateGroundTruth, StatsMatchEmissionLedger) {
  for (C c : kAllConditions) {
    const auto g = generate_ground_truth(scenario_profile(c, 60), 11);
    EXPECT_EQ(dataset_stats(g.ground_truth).class_counts, g.emitted);
  }
}

TEST(Perturb, ZeroNoiseIsIdentityAndPerfect) {
  for (C c : kAllConditions) {
    const auto g = generate_ground_truth(scenario_profile(c, 20), 2);
    PerturbationConfig cfg;
    cfg.score_mean_tp = 1.0;
    cfg.score_sigma = 0.0;
    const auto p = perturb(g.ground_truth, cfg);
    EXPECT_EQ(p.predictions.frames(), g.ground_truth.frames());
    EXPECT_EQ(p.ledger.dropped, 0);
    EXPECT_EQ(p.ledger.spurious, 0);
    for (auto mode : {EvaluationMode::PerFrameAveraged, EvaluationMode::DatasetLevel}) {
      EvaluationOptions opt;
      opt.mode = mode;
      opt.nms_iou = 1.0;  // repeated A-line bands must not suppress each other
      const auto rep = evaluate(g.ground_truth, p.predictions, opt);
      for (const auto& t : rep.thresholds) {
        for (std::size_t k = 0; k < kFeatureClassCount; ++k) {
          if (g.emitted.counts[k] > 0) EXPECT_EQ(t.per_class[k], std::optional<double>(1.0));
          else EXPECT_FALSE(t.per_class[k].has_value());
        }
      }
    }
  }
}

TEST(Perturb, DropAllGivesZero) {
  const auto g = generate_ground_truth(scenario_profile(C::CLD, 15), 2);
  PerturbationConfig cfg;
  cfg.drop_rate = 1.0;
  const auto p = perturb(g.ground_truth, cfg);
  EXPECT_EQ(p.predictions.object_count(), 0u);
  EXPECT_EQ(p.predictions.frame_count(), g.ground_truth.frame_count());
  EXPECT_EQ(p.ledger.dropped, static_cast<std::int64_t>(g.ground_truth.object_count()));
  const auto rep = evaluate(g.ground_truth, p.predictions, {});
  for (const auto& t : rep.thresholds) EXPECT_DOUBLE_EQ(t.mean_ap, 0.0);
}

TEST(Perturb, DropRateMatchesLedgerAndBinomial) {
  const auto g = generate_ground_truth(scenario_profile(C::RDS, 500), 21);
  const auto n = static_cast<std::int64_t>(g.ground_truth.object_count());
  ASSERT_GE(n, 1000);
  PerturbationConfig cfg;
  cfg.drop_rate = 0.3;
  cfg.seed = 5;
  const auto p = perturb(g.ground_truth, cfg);
  EXPECT_EQ(p.ledger.kept + p.ledger.dropped, n);

  // recall at a vanishing IoU threshold counts the surviving boxes
  std::int64_t tp = 0, total = 0;
  for (const auto& [key, objs] : g.ground_truth.frames()) {
    const auto gts = ground_truth_boxes(objs);
    const auto m = match_frame(*p.predictions.find(key), gts, 1e-9);
    for (const auto& cm : m.per_class) {
      tp += cm.tp;
      total += cm.tp + cm.fn;
    }
  }
  EXPECT_EQ(total, n);
  EXPECT_EQ(tp, p.ledger.kept);
  const double recall = static_cast<double>(tp) / static_cast<double>(n);
  const double sd = std::sqrt(0.7 * 0.3 / static_cast<double>(n));
  EXPECT_NEAR(recall, 0.7, 4 * sd);
}

TEST(Perturb, SpuriousAndScoresRespectConfig) {
  const auto g = generate_ground_truth(scenario_profile(C::TTN, 400), 1);
  PerturbationConfig cfg;
  cfg.spurious_rate = 0.5;
  cfg.jitter_sigma = 3.0;
  cfg.seed = 8;
  const auto p = perturb(g.ground_truth, cfg);
  EXPECT_EQ(static_cast<std::int64_t>(p.predictions.object_count()), p.ledger.kept + p.ledger.spurious);
  EXPECT_NEAR(static_cast<double>(p.ledger.spurious) / 400.0, 0.5, 4 * std::sqrt(0.25 / 400.0));
  for (const auto& [key, objs] : p.predictions.frames()) {
    for (const auto& o : objs) {
      EXPECT_GE(o.score, 0.0);
      EXPECT_LE(o.score, 1.0);
      EXPECT_TRUE(is_valid_image_box(o.box));
    }
  }
  EXPECT_EQ(to_csv(perturb(g.ground_truth, cfg).predictions), to_csv(p.predictions));
}

TEST(PerturbationConfig, Validation) {
  const Dataset empty(DatasetKind::GroundTruth);
  auto bad = [&](auto mutate) {
    PerturbationConfig c;
    mutate(c);
    EXPECT_THROW(perturb(empty, c), PreconditionError);
  };
  bad([](auto& c) { c.jitter_sigma = -1; });
  bad([](auto& c) { c.drop_rate = 1.5; });
  bad([](auto& c) { c.spurious_rate = -0.1; });
  bad([](auto& c) { c.score_mean_tp = 0.0; });
  bad([](auto& c) { c.score_mean_fp = 1.2; });
  bad([](auto& c) { c.score_sigma = -0.5; });
}
