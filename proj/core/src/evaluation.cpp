#include "luskit/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace luskit {

namespace {

void check_iou_threshold(double t) {
  if (!(t > 0.0 && t <= 1.0)) throw PreconditionError("IoU threshold must lie in (0, 1]");
}

std::int64_t gt_count_of(FeatureClass c, std::span<const GroundTruthBox> gts) {
  return std::count_if(gts.begin(), gts.end(), [c](const auto& g) { return g.feature == c; });
}

std::int64_t pred_count_of(FeatureClass c, std::span<const Detection> preds) {
  return std::count_if(preds.begin(), preds.end(), [c](const auto& p) { return p.feature == c; });
}

std::vector<ScoredOutcome> outcomes_of(const ClassMatch& m, std::span<const Detection> preds) {
  std::vector<ScoredOutcome> out;
  out.reserve(m.prediction_order.size());
  for (std::size_t i = 0; i < m.prediction_order.size(); ++i) {
    out.push_back({preds[m.prediction_order[i]].score, m.is_true_positive[i]});
  }
  return out;
}

bool has_class_gt(FeatureClass c, std::span<const EvalFrame> frames) {
  return std::any_of(frames.begin(), frames.end(),
                     [c](const EvalFrame& f) { return gt_count_of(c, f.ground_truth) > 0; });
}

// Both modes share the per-frame matches; `matches[i]` belongs to `frames[i]`.
double per_frame_averaged(FeatureClass c, std::span<const EvalFrame> frames,
                          std::span<const MatchOutcome> matches) {
  double sum = 0.0;
  std::int64_t counted = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const ClassMatch& m = matches[i][c];
    const std::int64_t n_gt = m.tp + m.fn;
    if (n_gt == 0 && m.prediction_order.empty()) continue;
    const auto outcomes = outcomes_of(m, frames[i].predictions);
    sum += average_precision(build_pr_curve(outcomes, n_gt));
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

double dataset_level(FeatureClass c, std::span<const EvalFrame> frames,
                     std::span<const MatchOutcome> matches) {
  std::vector<ScoredOutcome> pooled;
  std::int64_t n_gt = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const ClassMatch& m = matches[i][c];
    n_gt += m.tp + m.fn;
    const auto outcomes = outcomes_of(m, frames[i].predictions);
    pooled.insert(pooled.end(), outcomes.begin(), outcomes.end());
  }
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const ScoredOutcome& a, const ScoredOutcome& b) { return a.score > b.score; });
  return average_precision(build_pr_curve(pooled, n_gt));
}

std::vector<MatchOutcome> match_all(std::span<const EvalFrame> frames, double iou) {
  std::vector<MatchOutcome> out;
  out.reserve(frames.size());
  for (const EvalFrame& f : frames) out.push_back(match_frame(f.predictions, f.ground_truth, iou));
  return out;
}

void check_conservation(std::span<const EvalFrame> frames, std::span<const MatchOutcome> matches) {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (FeatureClass c : kAllFeatureClasses) {
      const ClassMatch& m = matches[i][c];
      if (m.tp + m.fn != gt_count_of(c, frames[i].ground_truth) ||
          m.tp + m.fp != pred_count_of(c, frames[i].predictions)) {
        throw std::logic_error("match bookkeeping violated tp/fp/fn conservation");
      }
    }
  }
}

}  // namespace

MatchOutcome match_frame(std::span<const Detection> predictions,
                         std::span<const GroundTruthBox> ground_truth, double iou_thresh) {
  check_iou_threshold(iou_thresh);
  MatchOutcome outcome;
  for (FeatureClass c : kAllFeatureClasses) {
    ClassMatch& m = outcome.per_class[index_of(c)];

    std::vector<std::size_t> gts;
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (ground_truth[g].feature == c) gts.push_back(g);
    }
    for (std::size_t p = 0; p < predictions.size(); ++p) {
      if (predictions[p].feature == c) m.prediction_order.push_back(p);
    }
    std::stable_sort(m.prediction_order.begin(), m.prediction_order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return predictions[a].score > predictions[b].score;
                     });

    std::vector<bool> taken(gts.size(), false);
    m.is_true_positive.reserve(m.prediction_order.size());
    for (std::size_t p : m.prediction_order) {
      std::optional<std::size_t> best;
      double best_iou = 0.0;
      for (std::size_t k = 0; k < gts.size(); ++k) {
        if (taken[k]) continue;
        const double v = iou(predictions[p].box, ground_truth[gts[k]].box);
        if (v >= iou_thresh && (!best || v > best_iou)) {
          best = k;
          best_iou = v;
        }
      }
      if (best) {
        taken[*best] = true;
        m.pairs.push_back({p, gts[*best], best_iou});
        m.is_true_positive.push_back(true);
        ++m.tp;
      } else {
        m.is_true_positive.push_back(false);
        ++m.fp;
      }
    }
    m.fn = static_cast<std::int64_t>(gts.size()) - m.tp;
  }
  return outcome;
}

PrecisionRecall precision_recall(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  if (tp < 0 || fp < 0 || fn < 0) throw PreconditionError("counts must be non-negative");
  PrecisionRecall pr;
  pr.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  pr.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  return pr;
}

PRCurve build_pr_curve(std::span<const ScoredOutcome> outcomes, std::int64_t gt_count) {
  if (gt_count < 0) throw PreconditionError("ground-truth count must be non-negative");
  PRCurve curve;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    (outcomes[i].true_positive ? tp : fp) += 1;
    const bool run_ends = i + 1 == outcomes.size() || outcomes[i + 1].score != outcomes[i].score;
    if (!run_ends) continue;
    const auto pr = precision_recall(tp, fp, gt_count - tp);
    curve.points.push_back({pr.recall, pr.precision});
  }
  return curve;
}

double average_precision(const PRCurve& curve) {
  const auto& pts = curve.points;
  std::vector<double> envelope(pts.size());
  double running = 0.0;
  for (std::size_t i = pts.size(); i-- > 0;) {
    running = std::max(running, pts[i].precision);
    envelope[i] = running;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ap += (pts[i].recall - prev_recall) * envelope[i];
    prev_recall = pts[i].recall;
  }
  return std::clamp(ap, 0.0, 1.0);
}

ClassAbsentError::ClassAbsentError(FeatureClass c)
    : PreconditionError("class " + std::string(to_string(c)) + " is absent from the dataset"),
      feature_(c) {}

double class_ap_per_frame_averaged(FeatureClass c, std::span<const EvalFrame> frames, double iou) {
  if (!has_class_gt(c, frames)) throw ClassAbsentError(c);
  const auto matches = match_all(frames, iou);
  return per_frame_averaged(c, frames, matches);
}

double class_ap_dataset_level(FeatureClass c, std::span<const EvalFrame> frames, double iou) {
  if (!has_class_gt(c, frames)) throw ClassAbsentError(c);
  const auto matches = match_all(frames, iou);
  return dataset_level(c, frames, matches);
}

double mean_average_precision(const std::map<FeatureClass, double>& per_class) {
  double sum = 0.0;
  for (FeatureClass c : kAllFeatureClasses) {
    const auto it = per_class.find(c);
    if (it == per_class.end()) throw ClassAbsentError(c);
    sum += it->second;
  }
  return sum / static_cast<double>(kFeatureClassCount);
}

std::string_view to_string(EvaluationMode m) noexcept {
  return m == EvaluationMode::PerFrameAveraged ? "per-frame" : "dataset";
}

std::optional<EvaluationMode> parse_evaluation_mode(std::string_view token) noexcept {
  if (token == "per-frame") return EvaluationMode::PerFrameAveraged;
  if (token == "dataset") return EvaluationMode::DatasetLevel;
  return std::nullopt;
}

APReport evaluate(const Dataset& gt, const Dataset& predictions, const EvaluationOptions& options) {
  if (options.ious.empty()) throw PreconditionError("at least one IoU threshold is required");
  for (double t : options.ious) check_iou_threshold(t);
  if (gt.object_count() == 0) throw PreconditionError("ground truth contains no boxes");
  for (const auto& [key, objects] : predictions.frames()) {
    if (!gt.find(key)) {
      throw PreconditionError("prediction frame " + key.video_id + "#" +
                              std::to_string(key.frame_index) + " is not in the ground truth");
    }
  }

  std::vector<EvalFrame> frames;
  frames.reserve(gt.frame_count());
  for (const auto& [key, objects] : gt.frames()) {
    EvalFrame f;
    f.ground_truth = ground_truth_boxes(objects);
    if (const auto* preds = predictions.find(key)) {
      f.predictions = nms(*preds, options.score_thresh, options.nms_iou);
    }
    frames.push_back(std::move(f));
  }

  APReport report;
  report.mode = options.mode;
  for (double t : options.ious) {
    const auto matches = match_all(frames, t);
    check_conservation(frames, matches);

    ThresholdResult result;
    result.iou = t;
    double sum = 0.0;
    int present = 0;
    for (FeatureClass c : kAllFeatureClasses) {
      if (!has_class_gt(c, frames)) continue;
      const double ap = options.mode == EvaluationMode::PerFrameAveraged
                            ? per_frame_averaged(c, frames, matches)
                            : dataset_level(c, frames, matches);
      result.per_class[index_of(c)] = ap;
      sum += ap;
      ++present;
    }
    result.mean_ap = sum / present;
    report.thresholds.push_back(result);
  }
  return report;
}

APReport report_from_per_class(EvaluationMode mode, std::span<const double> ious,
                               const std::vector<std::map<FeatureClass, double>>& per_class) {
  if (ious.size() != per_class.size()) {
    throw PreconditionError("one per-class column is required per IoU threshold");
  }
  APReport report;
  report.mode = mode;
  for (std::size_t i = 0; i < ious.size(); ++i) {
    ThresholdResult r;
    r.iou = ious[i];
    r.mean_ap = mean_average_precision(per_class[i]);
    for (const auto& [c, v] : per_class[i]) r.per_class[index_of(c)] = v;
    report.thresholds.push_back(r);
  }
  return report;
}

}  // namespace luskit
