#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "luskit/annotations.hpp"
#include "luskit/errors.hpp"
#include "luskit/geometry.hpp"

namespace luskit {

// ---- Matching ------------------------------------------------------------

struct MatchedPair {
  std::size_t prediction_index = 0;  // index into the frame's prediction list
  std::size_t gt_index = 0;          // index into the frame's ground-truth list
  double iou = 0.0;

  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

/// Match bookkeeping for one class within one frame.
struct ClassMatch {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::vector<MatchedPair> pairs;
  /// Predictions of this class in matching order (descending score, input
  /// order on ties), each with its outcome.
  std::vector<std::size_t> prediction_order;
  std::vector<bool> is_true_positive;
};

struct MatchOutcome {
  std::array<ClassMatch, kFeatureClassCount> per_class;

  const ClassMatch& operator[](FeatureClass c) const noexcept { return per_class[index_of(c)]; }
};

/// Greedy one-to-one matching, independently per class. Predictions are
/// visited by descending score (input order on ties); each takes the
/// unmatched same-class ground truth of highest IoU (lowest index on ties)
/// provided that IoU >= iou_thresh.
MatchOutcome match_frame(std::span<const Detection> predictions,
                         std::span<const GroundTruthBox> ground_truth, double iou_thresh);

// ---- Precision / recall ----------------------------------------------------

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// P = tp / (tp + fp), 1 when there are no predictions.
/// R = tp / (tp + fn), 0 when there is no ground truth.
PrecisionRecall precision_recall(std::int64_t tp, std::int64_t fp, std::int64_t fn);

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// Operating points swept over descending score thresholds. Recall is
/// non-decreasing along `points`.
struct PRCurve {
  std::vector<PRPoint> points;
};

struct ScoredOutcome {
  double score = 0.0;
  bool true_positive = false;
};

/// Builds the curve from matched predictions. `outcomes` must already be in
/// matching order; predictions sharing a score are admitted together, so
/// there is one point per distinct score.
PRCurve build_pr_curve(std::span<const ScoredOutcome> outcomes, std::int64_t gt_count);

/// All-point interpolated area: each precision is replaced by the maximum
/// precision at any greater-or-equal recall, then summed over recall steps.
double average_precision(const PRCurve& curve);

// ---- Aggregation -----------------------------------------------------------

/// Predictions and ground truth of one frame.
struct EvalFrame {
  std::vector<Detection> predictions;
  std::vector<GroundTruthBox> ground_truth;
};

/// Raised when a class has no ground truth anywhere in the evaluated data.
class ClassAbsentError : public PreconditionError {
 public:
  explicit ClassAbsentError(FeatureClass c);
  FeatureClass feature() const noexcept { return feature_; }

 private:
  FeatureClass feature_;
};

/// AP computed inside every frame that has ground truth or predictions of
/// the class, then averaged over those frames. Frames with predictions but
/// no ground truth contribute 0.
double class_ap_per_frame_averaged(FeatureClass c, std::span<const EvalFrame> frames, double iou);

/// AP from one curve over all frames' predictions of the class (matching
/// is still per frame).
double class_ap_dataset_level(FeatureClass c, std::span<const EvalFrame> frames, double iou);

/// Arithmetic mean over all seven classes; throws ClassAbsentError if any
/// class is missing.
double mean_average_precision(const std::map<FeatureClass, double>& per_class);

enum class EvaluationMode : std::uint8_t { PerFrameAveraged, DatasetLevel };

std::string_view to_string(EvaluationMode m) noexcept;
std::optional<EvaluationMode> parse_evaluation_mode(std::string_view token) noexcept;

struct ThresholdResult {
  double iou = 0.0;
  /// nullopt for classes with no ground truth in the evaluated data.
  std::array<std::optional<double>, kFeatureClassCount> per_class{};
  /// Mean over the classes that have a value.
  double mean_ap = 0.0;
};

struct APReport {
  EvaluationMode mode = EvaluationMode::PerFrameAveraged;
  std::vector<ThresholdResult> thresholds;
};

struct EvaluationOptions {
  std::vector<double> ious{0.4, 0.45, 0.5};
  EvaluationMode mode = EvaluationMode::PerFrameAveraged;
  double score_thresh = 0.8;
  double nms_iou = 0.2;
};

/// Applies nms() to every prediction frame, then computes per-class AP and
/// mAP at each IoU threshold. Prediction frames must all exist in `gt`;
/// ground-truth frames with no prediction frame count as empty predictions.
APReport evaluate(const Dataset& gt, const Dataset& predictions, const EvaluationOptions& options);

/// Builds a report from precomputed per-class values (same unit throughout,
/// e.g. percentages). Every threshold must carry all seven classes.
APReport report_from_per_class(EvaluationMode mode, std::span<const double> ious,
                               const std::vector<std::map<FeatureClass, double>>& per_class);

}  // namespace luskit
