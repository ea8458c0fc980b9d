#include "commands.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "luskit/anchors.hpp"
#include "luskit/annotations.hpp"
#include "luskit/diagnosis.hpp"
#include "luskit/errors.hpp"
#include "luskit/evaluation.hpp"
#include "luskit/random.hpp"
#include "luskit/report_io.hpp"
#include "luskit/synthetic.hpp"

namespace luskit::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

/// Unreadable or unwritable paths; reported with exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return in;
}

Dataset load_ground_truth(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_ground_truth(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Dataset load_predictions(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_predictions(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Dataset::VideoMap load_manifest(const std::string& path) {
  auto in = open_input(path);
  return parse_manifest(in);
}

/// Writes via a sibling temporary file and a rename, so readers never see
/// a partial file.
void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw InputError("cannot write '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw InputError("cannot write '" + path.string() + "': " + ec.message());
}

void emit(const std::string& content, const std::string& output_path, std::ostream& out) {
  if (output_path.empty()) {
    out << content;
  } else {
    write_file_atomic(output_path, content);
  }
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory '" + dir + "': " + ec.message());
}

std::vector<std::int64_t> parse_dims(const std::string& text, std::size_t expected,
                                     const std::string& what) {
  std::vector<std::int64_t> dims;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
      dims.push_back(v);
    } catch (const std::exception&) {
      throw ParseError(what + " must look like " + (expected == 3 ? "WxHxD" : "WxH") + ", got '" +
                       text + "'");
    }
  }
  if (dims.size() != expected) {
    throw ParseError(what + " must have " + std::to_string(expected) + " dimensions, got '" + text + "'");
  }
  return dims;
}

ojson class_counts_json(const ClassCounts& counts) {
  ojson j = ojson::object();
  for (FeatureClass c : kAllFeatureClasses) j[std::string(to_string(c))] = counts[c];
  return j;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string gt_path;
  std::string pred_path;
  std::string manifest_path;
  std::string per_class_path;
  std::vector<double> ious{0.4, 0.45, 0.5};
  std::string mode = "per-frame";
  double score_thresh = 0.8;
  double nms_iou = 0.2;
  std::string format = "text";
  std::string output;
};

std::string render_table(const APTable& table, const std::string& format) {
  if (format == "json") return table_to_json(table);
  if (format == "csv") return table_to_csv(table);
  return table_to_text(table);
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (!a.per_class_path.empty()) {
    auto in = open_input(a.per_class_path);
    emit(render_table(parse_per_class_table(in), a.format), a.output, out);
    return kExitOk;
  }
  if (a.gt_path.empty() || a.pred_path.empty()) {
    throw InputError("eval needs --gt and --pred (or --per-class)");
  }
  EvaluationOptions opts;
  opts.ious = a.ious;
  opts.mode = *parse_evaluation_mode(a.mode);
  opts.score_thresh = a.score_thresh;
  opts.nms_iou = a.nms_iou;
  if (!(opts.score_thresh >= 0.0 && opts.score_thresh <= 1.0) ||
      !(opts.nms_iou >= 0.0 && opts.nms_iou <= 1.0)) {
    throw PreconditionError("--score-thresh and --nms must lie in [0, 1]");
  }

  Dataset gt = load_ground_truth(a.gt_path);
  const Dataset preds = load_predictions(a.pred_path);
  if (!a.manifest_path.empty()) gt.merge_metadata(load_manifest(a.manifest_path));
  const APReport report = evaluate(gt, preds, opts);
  emit(render_table(to_table(report), a.format), a.output, out);
  return kExitOk;
}

// ---- anchors ----------------------------------------------------------------

struct AnchorArgs {
  std::string preset;
  std::vector<double> scales;
  std::vector<std::string> ratios;
  std::string feature_map;
  double stride = 16.0;
  std::string image;
  bool grid = false;
  std::string format = "text";
  std::string output;
};

int cmd_anchors(const AnchorArgs& a, std::ostream& out) {
  AnchorConfig config;
  if (!a.preset.empty()) config = anchor_preset(a.preset);
  if (!a.scales.empty()) config.scales = a.scales;
  if (!a.ratios.empty()) {
    config.ratios.clear();
    for (const auto& r : a.ratios) {
      const auto ratio = parse_ratio(r);
      if (!ratio) throw ParseError("invalid ratio '" + r + "' (expected h/w or an integer)");
      config.ratios.push_back(*ratio);
    }
  }
  const auto fm = parse_dims(a.feature_map, 3, "--feature-map");
  config.feature_map = {fm[0], fm[1], fm[2]};
  config.stride = a.stride;
  config.validate();

  const std::int64_t k = anchors_per_position(config);
  const std::int64_t total = potential_anchor_count(config);

  std::string text;
  if (a.grid) {
    double img_w = config.stride * static_cast<double>(fm[0]);
    double img_h = config.stride * static_cast<double>(fm[1]);
    if (!a.image.empty()) {
      const auto dims = parse_dims(a.image, 2, "--image");
      img_w = static_cast<double>(dims[0]);
      img_h = static_cast<double>(dims[1]);
    }
    const AnchorGrid grid = generate_anchors(config, img_w, img_h);
    std::ostringstream csv;
    csv << "depth,cell_x,cell_y,scale_index,ratio_index,xmin,ymin,xmax,ymax,in_image\n";
    csv.precision(17);
    for (const Anchor& an : grid.anchors) {
      csv << an.depth_index << ',' << an.cell_x << ',' << an.cell_y << ',' << an.scale_index << ','
          << an.ratio_index << ',' << an.box.xmin << ',' << an.box.ymin << ',' << an.box.xmax << ','
          << an.box.ymax << ',' << (in_image(an.box, img_w, img_h) ? 1 : 0) << '\n';
    }
    text = csv.str();
  } else if (a.format == "json") {
    ojson j;
    j["k"] = k;
    j["total"] = total;
    j["scales"] = config.scales;
    ojson ratios = ojson::array();
    for (const Ratio& r : config.ratios) ratios.push_back(r.to_string());
    j["ratios"] = std::move(ratios);
    j["feature_map"] = {fm[0], fm[1], fm[2]};
    text = j.dump(2) + "\n";
  } else {
    text = "k=" + std::to_string(k) + ", total=" + std::to_string(total) + "\n";
  }
  emit(text, a.output, out);
  return kExitOk;
}

// ---- diagnose ---------------------------------------------------------------

struct DiagnoseArgs {
  std::string pred_path;
  std::string manifest_path;
  std::string video;
  std::optional<double> age_hours;
  std::string rules_path;
  double min_score = 0.8;
  double min_fraction = 0.2;
  std::int64_t min_frames = 3;
  std::optional<double> pixels_per_mm;
  std::optional<std::int64_t> report_frame;
  std::string svg_path;
  std::string format = "text";
  std::string output;
};

RuleSet resolve_rules(const std::string& explicit_path) {
  std::string path = explicit_path;
  if (path.empty()) {
    if (const char* env = std::getenv("LUSKIT_RULES"); env && *env) path = env;
  }
  if (path.empty()) return builtin_rule_set();
  auto in = open_input(path);
  return parse_rule_set(in);
}

ojson summary_json(const ScanFeatureSummary& s) {
  ojson j = ojson::object();
  for (FeatureClass c : kAllFeatureClasses) {
    const FeaturePresence& p = s[c];
    j[std::string(to_string(c))] = {{"present", p.present},
                                    {"frame_frequency", p.frame_frequency},
                                    {"mean_score", p.mean_score},
                                    {"supporting_frames", p.supporting_frames}};
  }
  return j;
}

int cmd_diagnose(const DiagnoseArgs& a, std::ostream& out) {
  Dataset preds = load_predictions(a.pred_path);
  if (!a.manifest_path.empty()) preds.merge_metadata(load_manifest(a.manifest_path));
  const RuleSet rules = resolve_rules(a.rules_path);
  std::optional<CalibrationConfig> calib;
  if (a.pixels_per_mm) {
    calib = CalibrationConfig{*a.pixels_per_mm};
    calib->validate();
  }
  const PresenceRule presence{a.min_fraction, a.min_frames};

  std::vector<std::string> videos;
  if (!a.video.empty()) {
    videos.push_back(a.video);
  } else {
    for (const auto& [id, meta] : preds.videos()) videos.push_back(id);
  }

  ojson doc;
  doc["note"] = "Ranked candidates with evidence for clinician review; not a diagnosis.";
  doc["scans"] = ojson::array();
  std::string text;

  auto report_scan = [&](const std::string& video_id, const ScanFeatureSummary& summary,
                         std::optional<double> age, const std::vector<ScanFrame>& frames) {
    const auto candidates = rank_conditions(summary, age, rules);
    ojson scan;
    scan["video_id"] = video_id;
    scan["age_hours"] = age ? ojson(*age) : ojson();
    scan["total_frames"] = summary.total_frames;
    scan["features"] = summary_json(summary);
    scan["candidates"] = ojson::parse(candidates_to_json(candidates));

    text += "Scan " + (video_id.empty() ? std::string("(no frames)") : video_id) + ": " +
            std::to_string(summary.total_frames) + " frame(s), age " +
            (age ? format_number(*age) + " h" : std::string("unknown")) + "\n  present:";
    const auto present = summary.present_features();
    if (present.empty()) text += " none";
    for (FeatureClass c : present) text += " " + std::string(to_string(c));
    text += "\n" + candidates_to_text(candidates);

    if (a.report_frame) {
      const auto it = std::find_if(frames.begin(), frames.end(), [&](const ScanFrame& f) {
        return f.frame_index == *a.report_frame;
      });
      if (it != frames.end()) {
        const FrameReport fr = annotate_frame_report({video_id, it->frame_index}, it->detections,
                                                     candidates);
        scan["frame_report"] = ojson::parse(frame_report_to_json(fr));
        if (!a.svg_path.empty()) write_file_atomic(a.svg_path, frame_report_to_svg(fr));
      }
    }
    doc["scans"].push_back(std::move(scan));
  };

  if (videos.empty()) {
    // Nothing to aggregate: rank against an empty summary.
    const std::optional<double> age = a.age_hours;
    report_scan("", ScanFeatureSummary{}, age, {});
  }
  for (const std::string& video_id : videos) {
    auto frames = scan_frames(preds, video_id);
    if (frames.empty()) throw PreconditionError("no prediction frames for video '" + video_id + "'");
    if (calib) {
      for (ScanFrame& f : frames) f.detections = apply_pleura_calibration(f.detections, *calib);
    }
    std::optional<double> age = a.age_hours;
    if (!age) {
      if (const auto it = preds.videos().find(video_id); it != preds.videos().end()) {
        age = it->second.age_hours;
      }
    }
    report_scan(video_id, aggregate_scan(frames, a.min_score, presence), age, frames);
  }

  emit(a.format == "json" ? doc.dump(2) + "\n" : text, a.output, out);
  return kExitOk;
}

// ---- stats ------------------------------------------------------------------

struct StatsArgs {
  std::string gt_path;
  std::string pred_path;
  std::string format = "text";
  std::string output;
};

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  if (a.gt_path.empty() == a.pred_path.empty()) throw InputError("stats needs exactly one of --gt or --pred");
  const Dataset d = a.gt_path.empty() ? load_predictions(a.pred_path) : load_ground_truth(a.gt_path);
  const DatasetStats s = dataset_stats(d);
  std::string text;
  if (a.format == "json") {
    ojson j;
    j["class_counts"] = class_counts_json(s.class_counts);
    j["total_boxes"] = s.class_counts.total();
    j["frames"] = s.frame_count;
    j["frames_per_video"] = s.frames_per_video;
    text = j.dump(2) + "\n";
  } else {
    char buf[64];
    for (FeatureClass c : kAllFeatureClasses) {
      std::snprintf(buf, sizeof(buf), "%-18s %lld\n", std::string(to_string(c)).c_str(),
                    static_cast<long long>(s.class_counts[c]));
      text += buf;
    }
    std::snprintf(buf, sizeof(buf), "%-18s %lld\n", "total", static_cast<long long>(s.class_counts.total()));
    text += buf;
    text += "frames: " + std::to_string(s.frame_count) + "\n";
    for (const auto& [video, n] : s.frames_per_video) {
      text += "  " + video + ": " + std::to_string(n) + "\n";
    }
  }
  emit(text, a.output, out);
  return kExitOk;
}

// ---- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string profile;
  std::int64_t frames = 10;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string video_id;
  std::optional<double> age_hours;
  PerturbationConfig perturbation;
};

int cmd_synth(SynthArgs a, std::ostream& out) {
  const auto condition = parse_condition(a.profile);
  if (!condition) throw ParseError("unknown profile '" + a.profile + "'");
  ScenarioProfile profile = scenario_profile(*condition, a.frames);
  if (!a.video_id.empty()) profile.video_id = a.video_id;
  if (a.age_hours) profile.age_hours = a.age_hours;
  a.perturbation.seed = derive_seed(a.seed, 0xF00D);
  a.perturbation.image_width = profile.image_width;
  a.perturbation.image_height = profile.image_height;
  a.perturbation.validate();

  const GeneratedScenario scenario = generate_ground_truth(profile, a.seed);
  const PerturbedPredictions perturbed = perturb(scenario.ground_truth, a.perturbation);

  ojson ledger;
  ledger["profile"] = a.profile;
  ledger["frames"] = a.frames;
  ledger["seed"] = a.seed;
  ledger["emitted"] = class_counts_json(scenario.emitted);
  ledger["predictions"] = {{"kept", perturbed.ledger.kept},
                           {"dropped", perturbed.ledger.dropped},
                           {"spurious", perturbed.ledger.spurious},
                           {"kept_by_class", class_counts_json(perturbed.ledger.kept_by_class)}};

  ensure_directory(a.out_dir);
  const fs::path dir(a.out_dir);
  write_file_atomic(dir / "gt.csv", to_csv(scenario.ground_truth));
  write_file_atomic(dir / "pred.csv", to_csv(perturbed.predictions));
  write_file_atomic(dir / "manifest.json", serialize_manifest(scenario.ground_truth.videos()));
  write_file_atomic(dir / "ledger.json", ledger.dump(2) + "\n");
  out << "wrote gt.csv, pred.csv, manifest.json, ledger.json to " << a.out_dir << "\n";
  return kExitOk;
}

// ---- split ------------------------------------------------------------------

struct SplitArgs {
  std::string gt_path;
  std::string manifest_path;
  double test_fraction = 0.3;
  std::uint64_t seed = 0;
  std::string stratify = "condition";
  std::string out_dir;
  std::string load_path;
  bool check_reference = false;
};

int cmd_split(const SplitArgs& a, std::ostream& out) {
  Dataset d = load_ground_truth(a.gt_path);
  if (!a.manifest_path.empty()) d.merge_metadata(load_manifest(a.manifest_path));

  DatasetSplit split;
  if (!a.load_path.empty()) {
    auto in = open_input(a.load_path);
    split = load_split_manifest(in, d);
  } else {
    split = split_dataset(d, a.test_fraction, a.seed,
                          a.stratify == "video" ? StratifyBy::Video : StratifyBy::Condition);
  }

  if (!a.out_dir.empty()) {
    ensure_directory(a.out_dir);
    const fs::path dir(a.out_dir);
    write_file_atomic(dir / "train.csv", to_csv(split.train));
    write_file_atomic(dir / "test.csv", to_csv(split.test));
    write_file_atomic(dir / "split.json", serialize_split_manifest(split));
  }
  out << "train frames: " << split.train.frame_count() << ", test frames: " << split.test.frame_count()
      << "\n";

  if (a.check_reference) {
    const auto expected = reference_split_counts();
    const auto problems = validate_split_counts(split, expected);
    if (!problems.empty()) {
      std::string msg = "split does not match the reference counts:";
      for (const auto& p : problems) msg += "\n  " + p;
      throw PreconditionError(msg);
    }
    out << "split matches the reference per-condition counts\n";
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"luskit: lung-ultrasound detection evaluation and rule-based decision support"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "luskit 0.1.0");

  const auto formats = CLI::IsMember({"text", "json", "csv"});
  const auto unit_interval = CLI::Range(0.0, 1.0);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate predictions against ground truth (AP / mAP)");
  eval->add_option("--gt", eval_args.gt_path, "Ground-truth CSV");
  eval->add_option("--pred", eval_args.pred_path, "Prediction CSV");
  eval->add_option("--manifest", eval_args.manifest_path, "Video manifest JSON");
  eval->add_option("--per-class", eval_args.per_class_path,
                   "Aggregate a per-class AP table (percent CSV) instead of evaluating");
  eval->add_option("--iou", eval_args.ious, "IoU thresholds")->delimiter(',')->capture_default_str();
  eval->add_option("--mode", eval_args.mode, "per-frame | dataset")
      ->check(CLI::IsMember({"per-frame", "dataset"}))
      ->capture_default_str();
  eval->add_option("--score-thresh", eval_args.score_thresh, "Minimum detection score")
      ->capture_default_str();
  eval->add_option("--nms", eval_args.nms_iou, "NMS IoU threshold")->capture_default_str();
  eval->add_option("--format", eval_args.format)->check(formats)->capture_default_str();
  eval->add_option("-o,--output", eval_args.output, "Write to file instead of stdout");

  AnchorArgs anchor_args;
  auto* anchors = app.add_subcommand("anchors", "Anchor counts and grids");
  anchors->add_option("--preset", anchor_args.preset, "paper-frcnn | paper-retinanet")
      ->check(CLI::IsMember({"paper-frcnn", "paper-retinanet"}));
  anchors->add_option("--scales", anchor_args.scales, "Anchor scales")->delimiter(',');
  anchors->add_option("--ratios", anchor_args.ratios, "Height:width ratios, e.g. 31/119")->delimiter(',');
  anchors->add_option("--feature-map", anchor_args.feature_map, "WxHxD")->required();
  anchors->add_option("--stride", anchor_args.stride, "Image pixels per cell")->capture_default_str();
  anchors->add_option("--image", anchor_args.image, "WxH image size for --grid");
  anchors->add_flag("--grid", anchor_args.grid, "Print every anchor as CSV");
  anchors->add_option("--format", anchor_args.format)->check(CLI::IsMember({"text", "json"}));
  anchors->add_option("-o,--output", anchor_args.output);

  DiagnoseArgs diag_args;
  auto* diagnose = app.add_subcommand("diagnose", "Rank candidate conditions from detections");
  diagnose->add_option("--pred", diag_args.pred_path, "Prediction CSV")->required();
  diagnose->add_option("--manifest", diag_args.manifest_path, "Video manifest JSON (ages)");
  diagnose->add_option("--video", diag_args.video, "Only this video");
  diagnose->add_option("--age-hours", diag_args.age_hours, "Patient age, overrides manifest")
      ->check(CLI::NonNegativeNumber);
  diagnose->add_option("--rules", diag_args.rules_path, "Rule file (default: $LUSKIT_RULES, then built-in)");
  diagnose->add_option("--min-score", diag_args.min_score)->check(unit_interval)->capture_default_str();
  diagnose->add_option("--min-fraction", diag_args.min_fraction)->capture_default_str();
  diagnose->add_option("--min-frames", diag_args.min_frames)->capture_default_str();
  diagnose->add_option("--pixels-per-mm", diag_args.pixels_per_mm,
                       "Calibration; relabels over-thick normal pleura as thick");
  diagnose->add_option("--report-frame", diag_args.report_frame, "Attach a frame report for this frame");
  diagnose->add_option("--svg", diag_args.svg_path, "Write the frame report overlay as SVG");
  diagnose->add_option("--format", diag_args.format)->check(CLI::IsMember({"text", "json"}));
  diagnose->add_option("-o,--output", diag_args.output);

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "Per-class box counts and per-video frame counts");
  stats->add_option("--gt", stats_args.gt_path, "Ground-truth CSV");
  stats->add_option("--pred", stats_args.pred_path, "Prediction CSV");
  stats->add_option("--format", stats_args.format)->check(CLI::IsMember({"text", "json"}));
  stats->add_option("-o,--output", stats_args.output);

  SynthArgs synth_args;
  synth_args.perturbation.jitter_sigma = 4.0;
  synth_args.perturbation.drop_rate = 0.1;
  synth_args.perturbation.spurious_rate = 0.1;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scenario and perturbed predictions");
  synth->add_option("--profile", synth_args.profile, "Normal | RDS | TTN | PDA | CLD")->required();
  synth->add_option("--frames", synth_args.frames)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--seed", synth_args.seed)->capture_default_str();
  synth->add_option("--out-dir", synth_args.out_dir)->required();
  synth->add_option("--video-id", synth_args.video_id);
  synth->add_option("--age-hours", synth_args.age_hours)->check(CLI::NonNegativeNumber);
  synth->add_option("--jitter", synth_args.perturbation.jitter_sigma)->capture_default_str();
  synth->add_option("--drop-rate", synth_args.perturbation.drop_rate)->check(unit_interval)->capture_default_str();
  synth->add_option("--spurious-rate", synth_args.perturbation.spurious_rate)
      ->check(unit_interval)
      ->capture_default_str();
  synth->add_option("--score-tp", synth_args.perturbation.score_mean_tp)->capture_default_str();
  synth->add_option("--score-fp", synth_args.perturbation.score_mean_fp)->capture_default_str();
  synth->add_option("--score-sigma", synth_args.perturbation.score_sigma)->capture_default_str();

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "Stratified train/test split");
  split->add_option("--gt", split_args.gt_path, "Ground-truth CSV")->required();
  split->add_option("--manifest", split_args.manifest_path, "Video manifest JSON (conditions)");
  split->add_option("--test-fraction", split_args.test_fraction)->capture_default_str();
  split->add_option("--seed", split_args.seed)->capture_default_str();
  split->add_option("--stratify", split_args.stratify)
      ->check(CLI::IsMember({"condition", "video"}))
      ->capture_default_str();
  split->add_option("--out-dir", split_args.out_dir, "Write train.csv, test.csv, split.json");
  split->add_option("--load", split_args.load_path, "Use an existing split manifest");
  split->add_flag("--check-reference", split_args.check_reference,
                  "Require the reference per-condition train/test counts");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& s : args) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInput;
  }

  try {
    if (eval->parsed()) return cmd_eval(eval_args, out);
    if (anchors->parsed()) return cmd_anchors(anchor_args, out);
    if (diagnose->parsed()) return cmd_diagnose(diag_args, out);
    if (stats->parsed()) return cmd_stats(stats_args, out);
    if (synth->parsed()) return cmd_synth(synth_args, out);
    if (split->parsed()) return cmd_split(split_args, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitPrecondition;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace luskit::cli
