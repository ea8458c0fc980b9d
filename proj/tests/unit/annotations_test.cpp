#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "generators.hpp"
#include "luskit/annotations.hpp"
#include "luskit/errors.hpp"

using namespace luskit;

namespace {

Dataset gt_from(const std::string& text) {
  std::istringstream in(text);
  return parse_ground_truth(in);
}

Dataset preds_from(const std::string& text) {
  std::istringstream in(text);
  return parse_predictions(in);
}

std::size_t error_line_gt(const std::string& text) {
  try {
    gt_from(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

std::size_t error_line_pred(const std::string& text) {
  try {
    preds_from(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

// Frames per condition, one video per condition, 3 boxes per frame.
Dataset labelled_dataset(const std::vector<std::pair<ConditionClass, int>>& sizes) {
  Dataset d(DatasetKind::GroundTruth);
  for (const auto& [cond, n] : sizes) {
    const std::string vid = "vid_" + std::string(to_string(cond));
    d.video(vid).condition = cond;
    for (int i = 0; i < n; ++i) {
      for (int b = 0; b < 3; ++b) d.add({vid, i}, GroundTruthBox{{1.0 * b, 0, b + 1.0, 1}, FeatureClass::ALines});
    }
  }
  return d;
}

}  // namespace

TEST(ParseGroundTruth, Examples) {
  EXPECT_TRUE(gt_from("").empty());
  const Dataset d = gt_from("vidA,12,ALines,49,149,168,180\n");
  ASSERT_EQ(d.frame_count(), 1u);
  const auto* f = d.find({"vidA", 12});
  ASSERT_NE(f, nullptr);
  ASSERT_EQ(f->size(), 1u);
  EXPECT_EQ((*f)[0].feature, FeatureClass::ALines);
  EXPECT_EQ((*f)[0].box, (BoundingBox{49, 149, 168, 180}));
}

TEST(ParseGroundTruth, CommentsBlankLinesAndCrlf) {
  const Dataset d = gt_from("# video,frame,class,xmin,ymin,xmax,ymax\r\n\nv,0,ThickPleura,1,2,3,4\r\nv,1\n");
  EXPECT_EQ(d.frame_count(), 2u);
  EXPECT_EQ(d.object_count(), 1u);
  EXPECT_TRUE(d.find({"v", 1})->empty());
}

TEST(ParseGroundTruth, ErrorsNameTheLine) {
  EXPECT_EQ(error_line_gt("v,0,ALines,1,1,2,2\nv,1,ALines,5,1,2,2\n"), 2u);  // xmax < xmin
  EXPECT_EQ(error_line_gt("# c\nv,0,Pneumonia,1,1,2,2\n"), 2u);
  EXPECT_EQ(error_line_gt("v,0,alines,1,1,2,2\n"), 1u);
  EXPECT_EQ(error_line_gt("v,0,ALines,1,1,2\n"), 1u);
  EXPECT_EQ(error_line_gt("v,-1,ALines,1,1,2,2\n"), 1u);
  EXPECT_EQ(error_line_gt("v,1.5,ALines,1,1,2,2\n"), 1u);
  EXPECT_EQ(error_line_gt("v,0,ALines,1,1,2,x\n"), 1u);
  EXPECT_EQ(error_line_gt("v,0,ALines,1,1,2,nan\n"), 1u);
  EXPECT_EQ(error_line_gt("v,0,ALines,-1,1,2,2\n"), 1u);
  EXPECT_EQ(error_line_gt("v,0,ALines,1,2,2,2\n"), 1u);
  EXPECT_EQ(error_line_gt(",0,ALines,1,1,2,2\n"), 1u);
  EXPECT_EQ(error_line_gt("\n\n\nv,0,ALines, 1,1,2,2\n"), 4u);
  // a prediction line is malformed ground truth
  EXPECT_EQ(error_line_gt("v,0,ALines,0.9,1,1,2,2\n"), 1u);
  try {
    gt_from("v,0,ALines,1,1,2,2\nv,0,Nope,1,1,2,2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParsePredictions, Examples) {
  const Dataset d = preds_from("vidA,12,ALines,0.97,49,149,168,180\n");
  EXPECT_DOUBLE_EQ(d.find({"vidA", 12})->at(0).score, 0.97);
  EXPECT_EQ(error_line_pred("v,0,ALines,1.3,1,1,2,2\n"), 1u);
  EXPECT_EQ(error_line_pred("v,0,ALines,0.5,1,1,2,2\nv,0,ALines,-0.1,1,1,2,2\n"), 2u);
  EXPECT_EQ(error_line_pred("v,0,ALines,1,1,2,2\n"), 1u);
}

TEST(FormatProperty, RoundTrip) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    for (auto kind : {DatasetKind::GroundTruth, DatasetKind::Predictions}) {
      const Dataset d = support::random_dataset(rng, kind);
      const std::string text = to_csv(d);
      const Dataset back = kind == DatasetKind::GroundTruth ? gt_from(text) : preds_from(text);
      ASSERT_EQ(back, d);
      EXPECT_EQ(to_csv(back), text);
    }
  }
}

TEST(FormatProperty, SerializeCanonicalizes) {
  const Dataset d = preds_from("#h\nb,2,ALines,0.50,1.0,2,3,4\na,7,Consolidation,1,0,0,1,1\n");
  EXPECT_EQ(to_csv(d), "a,7,Consolidation,1,0,0,1,1\nb,2,ALines,0.5,1,2,3,4\n");
}

TEST(Manifest, RoundTripAndErrors) {
  std::istringstream in(R"({"videos": {"v1": {"condition": "RDS", "age_hours": 6, "frame_rate": 18},
                                       "v2": {}}})");
  const auto videos = parse_manifest(in);
  ASSERT_EQ(videos.size(), 2u);
  EXPECT_EQ(videos.at("v1").condition, ConditionClass::RDS);
  EXPECT_EQ(videos.at("v1").age_hours, std::optional<double>(6.0));
  EXPECT_FALSE(videos.at("v2").condition.has_value());
  EXPECT_DOUBLE_EQ(videos.at("v2").frame_rate, 18.0);

  std::istringstream again(serialize_manifest(videos));
  EXPECT_EQ(parse_manifest(again), videos);

  for (const char* bad : {"{", "[]", R"({"videos": {"v": {"condition": "Flu"}}})",
                          R"({"videos": {"v": {"age_hours": -1}}})", R"({"videos": {"v": {"frame_rate": 0}}})"}) {
    std::istringstream s(bad);
    EXPECT_THROW(parse_manifest(s), ParseError) << bad;
  }
}

TEST(DatasetStats, Examples) {
  EXPECT_EQ(dataset_stats(Dataset(DatasetKind::GroundTruth)).class_counts.total(), 0);

  Dataset d(DatasetKind::GroundTruth);
  const ClassCounts ref = reference_class_counts();
  EXPECT_EQ(ref.total(), 2511);
  std::int64_t frame = 0;
  for (FeatureClass c : kAllFeatureClasses) {
    for (std::int64_t i = 0; i < ref[c]; ++i) d.add({"v", frame++ / 4}, GroundTruthBox{{0, 0, 1, 1}, c});
  }
  const auto s = dataset_stats(d);
  EXPECT_EQ(s.class_counts, ref);
  EXPECT_EQ(s.class_counts[FeatureClass::ALines], 1114);
  EXPECT_EQ(s.class_counts[FeatureClass::SeparateBLines], 75);
  EXPECT_EQ(s.frames_per_video.at("v"), static_cast<std::int64_t>(s.frame_count));
}

TEST(DatasetStatsProperty, AdditiveOverDisjointUnion) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    Dataset a = support::random_dataset(rng, DatasetKind::GroundTruth);
    const Dataset b = support::random_dataset(rng, DatasetKind::GroundTruth);
    Dataset merged(DatasetKind::GroundTruth);
    for (const auto& [key, objs] : a.frames()) merged.frame({"a" + key.video_id, key.frame_index}) = objs;
    for (const auto& [key, objs] : b.frames()) merged.frame({"b" + key.video_id, key.frame_index}) = objs;
    const auto sa = dataset_stats(a), sb = dataset_stats(b), sm = dataset_stats(merged);
    EXPECT_EQ(sm.class_counts, sa.class_counts + sb.class_counts);
    EXPECT_EQ(sm.frame_count, sa.frame_count + sb.frame_count);
    EXPECT_EQ(sm.class_counts.total(), static_cast<std::int64_t>(merged.object_count()));
  }
}

TEST(Split, TwoFramesHalf) {
  const Dataset d = labelled_dataset({{ConditionClass::TTN, 2}});
  const auto s = split_dataset(d, 0.5, 1, StratifyBy::Condition);
  EXPECT_EQ(s.train.frame_count(), 1u);
  EXPECT_EQ(s.test.frame_count(), 1u);
}

TEST(Split, Deterministic) {
  const Dataset d = labelled_dataset({{ConditionClass::RDS, 40}, {ConditionClass::Normal, 33}});
  const auto a = split_dataset(d, 0.3, 42, StratifyBy::Condition);
  const auto b = split_dataset(d, 0.3, 42, StratifyBy::Condition);
  EXPECT_EQ(serialize_split_manifest(a), serialize_split_manifest(b));
  EXPECT_EQ(a.train, b.train);
  const auto c = split_dataset(d, 0.3, 43, StratifyBy::Condition);
  EXPECT_NE(serialize_split_manifest(a), serialize_split_manifest(c));
}

TEST(Split, Preconditions) {
  const Dataset d = labelled_dataset({{ConditionClass::TTN, 1}, {ConditionClass::RDS, 5}});
  EXPECT_THROW(split_dataset(d, 0.3, 1, StratifyBy::Condition), PreconditionError);
  const Dataset ok = labelled_dataset({{ConditionClass::TTN, 4}});
  EXPECT_THROW(split_dataset(ok, 0.0, 1, StratifyBy::Condition), PreconditionError);
  EXPECT_THROW(split_dataset(ok, 1.0, 1, StratifyBy::Condition), PreconditionError);
}

TEST(SplitProperty, DisjointCoverStratified) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> size(2, 60);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::pair<ConditionClass, int>> sizes;
    for (ConditionClass c : kAllConditions) sizes.emplace_back(c, size(rng));
    const Dataset d = labelled_dataset(sizes);
    const double f = frac(rng);
    const auto s = split_dataset(d, f, rng(), StratifyBy::Condition);

    std::set<FrameKey> seen;
    for (const auto* part : {&s.train, &s.test}) {
      for (const auto& [key, objs] : part->frames()) {
        EXPECT_TRUE(seen.insert(key).second);
        EXPECT_EQ(objs, *d.find(key));
      }
    }
    EXPECT_EQ(seen.size(), d.frame_count());
    for (const auto& [cond, n] : sizes) {
      const std::string vid = "vid_" + std::string(to_string(cond));
      std::int64_t n_test = 0;
      for (const auto& [key, objs] : s.test.frames()) n_test += key.video_id == vid;
      EXPECT_LE(std::abs(static_cast<double>(n_test) - f * n), 1.0) << n << " " << f;
      EXPECT_GE(n_test, 1);
      EXPECT_LE(n_test, n - 1);
    }
  }
}

TEST(SplitManifest, LoadAndValidateReference) {
  const auto ref = reference_split_counts();
  std::vector<std::pair<ConditionClass, int>> sizes;
  for (const auto& r : ref) sizes.emplace_back(r.condition, static_cast<int>(r.train + r.test));
  const Dataset d = labelled_dataset(sizes);

  std::ostringstream manifest;
  manifest << R"({"train": [)";
  bool first = true;
  auto emit = [&](const std::string& vid, std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      manifest << (first ? "" : ",") << "[\"" << vid << "\"," << i << "]";
      first = false;
    }
  };
  for (const auto& r : ref) emit("vid_" + std::string(to_string(r.condition)), 0, r.train);
  manifest << R"(], "test": [)";
  first = true;
  for (const auto& r : ref) emit("vid_" + std::string(to_string(r.condition)), r.train, r.train + r.test);
  manifest << "]}";

  std::istringstream in(manifest.str());
  const auto split = load_split_manifest(in, d);
  EXPECT_TRUE(validate_split_counts(split, ref).empty());
  EXPECT_EQ(split.test.frame_count(), 12u + 8 + 10 + 8 + 11);

  auto wrong = ref;
  wrong[0].test += 1;
  EXPECT_FALSE(validate_split_counts(split, wrong).empty());

  std::istringstream again(serialize_split_manifest(split));
  EXPECT_EQ(load_split_manifest(again, d).test, split.test);
}

TEST(SplitManifest, Errors) {
  const Dataset d = labelled_dataset({{ConditionClass::TTN, 3}});
  std::istringstream unknown(R"({"train": [["nope", 0]], "test": []})");
  EXPECT_THROW(load_split_manifest(unknown, d), PreconditionError);
  std::istringstream overlap(R"({"train": [["vid_TTN", 0]], "test": [["vid_TTN", 0]]})");
  EXPECT_THROW(load_split_manifest(overlap, d), PreconditionError);
  std::istringstream bad(R"({"train": 3})");
  EXPECT_THROW(load_split_manifest(bad, d), ParseError);
}

TEST(ReferenceSplit, Counts) {
  const auto ref = reference_split_counts();
  using P = std::pair<std::int64_t, std::int64_t>;
  std::map<ConditionClass, P> m;
  for (const auto& r : ref) m[r.condition] = {r.train, r.test};
  EXPECT_EQ(m[ConditionClass::RDS], P(63, 12));
  EXPECT_EQ(m[ConditionClass::TTN], P(67, 8));
  EXPECT_EQ(m[ConditionClass::PDA], P(65, 10));
  EXPECT_EQ(m[ConditionClass::CLD], P(77, 8));
  EXPECT_EQ(m[ConditionClass::Normal], P(101, 11));
}
