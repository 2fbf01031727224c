#include "actorsets/commands.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "actorsets/clip_io.hpp"
#include "actorsets/csv_io.hpp"
#include "actorsets/evalmap.hpp"
#include "actorsets/powerset.hpp"
#include "actorsets/solver.hpp"
#include "actorsets/synth_io.hpp"
#include "actorsets/synthbench.hpp"

namespace actorsets {

namespace {

using nlohmann::ordered_json;

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

struct CapOptions {
  int powerset_cap = kDefaultPowerSetCap;
  int solver_cap = kDefaultSolverCap;
};

void add_cap_options(CLI::App& cmd, CapOptions& caps) {
  cmd.add_option("--powerset-cap", caps.powerset_cap, "Largest label set to enumerate")
      ->capture_default_str()
      ->check(CLI::Range(1, kMaxClasses));
  cmd.add_option("--solver-cap", caps.solver_cap, "Largest label set for the exact solver")
      ->capture_default_str()
      ->check(CLI::Range(1, kMaxClasses));
}

// ---- assign ---------------------------------------------------------------

struct AssignOptions {
  std::string input;
  std::string output;
  std::string report = "json";
  bool no_lp = false;
  bool skip_infeasible = false;
  bool lenient = false;
  int jobs = 1;
  CapOptions caps;
};

struct FrameOutcome {
  const Clip* clip = nullptr;
  const Frame* frame = nullptr;
  bool feasible = true;
  std::optional<double> objective;
  std::vector<AssignedSubset> assignments;
  std::exception_ptr error;
};

FrameOutcome assign_frame(const Clip& clip, const Frame& frame, const AssignOptions& opt) {
  FrameOutcome outcome;
  outcome.clip = &clip;
  outcome.frame = &frame;
  const auto& labels = clip.annotation.labels;
  if (opt.no_lp) {
    const auto subsets = assign_without_lp(frame.actors, labels);
    for (std::size_t i = 0; i < subsets.size(); ++i) {
      outcome.assignments.push_back({frame.actors[i].actor_id, subsets[i]});
    }
    std::sort(outcome.assignments.begin(), outcome.assignments.end(),
              [](const auto& a, const auto& b) { return a.actor_id < b.actor_id; });
    return outcome;
  }
  std::vector<SubsetScoreTable> tables;
  tables.reserve(frame.actors.size());
  for (const auto& actor : frame.actors) {
    tables.push_back(score_actor_subsets(actor, labels, opt.caps.powerset_cap));
  }
  const auto result = solve_assignment(tables, labels, opt.caps.solver_cap);
  outcome.feasible = result.feasible;
  if (result.feasible) outcome.objective = result.objective;
  outcome.assignments = result.assignments;
  return outcome;
}

std::vector<FrameOutcome> assign_all(const ClipFile& file, const AssignOptions& opt) {
  std::vector<std::pair<const Clip*, const Frame*>> work;
  for (const auto& clip : file.clips) {
    for (const auto& frame : clip.frames) work.emplace_back(&clip, &frame);
  }
  std::vector<FrameOutcome> outcomes(work.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < work.size(); i = next++) {
      try {
        outcomes[i] = assign_frame(*work[i].first, *work[i].second, opt);
      } catch (...) {
        outcomes[i].error = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(opt.jobs, static_cast<int>(work.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& thread : pool) thread.join();
  // Surface the first failure in input order so the result does not depend
  // on scheduling.
  for (const auto& outcome : outcomes) {
    if (outcome.error) std::rethrow_exception(outcome.error);
  }
  return outcomes;
}

std::string classes_text(const ActionSubset& subset) {
  std::string out;
  for (int c : subset.classes()) {
    if (!out.empty()) out += ' ';
    out += std::to_string(c);
  }
  return out;
}

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string assignment_report_json(const ClipFile& file, const std::vector<FrameOutcome>& outcomes,
                                   const AssignOptions& opt) {
  ordered_json doc;
  doc["format"] = "actorsets-assignments";
  doc["version"] = 1;
  doc["method"] = opt.no_lp ? "no-lp" : "lp";
  doc["frames"] = ordered_json::array();
  for (const auto& o : outcomes) {
    ordered_json f;
    f["clip_id"] = o.clip->annotation.clip_id;
    f["frame_id"] = o.frame->frame_id;
    f["labels"] = o.clip->annotation.labels.values();
    f["feasible"] = o.feasible;
    f["objective"] = o.objective ? ordered_json(*o.objective) : ordered_json(nullptr);
    f["assignments"] = ordered_json::array();
    for (const auto& a : o.assignments) {
      ordered_json entry;
      entry["actor_id"] = a.actor_id;
      entry["classes"] = a.subset.classes();
      std::vector<std::string> names;
      for (int c : a.subset.classes()) names.push_back(file.class_names[static_cast<std::size_t>(c)]);
      entry["names"] = names;
      f["assignments"].push_back(std::move(entry));
    }
    doc["frames"].push_back(std::move(f));
  }
  return doc.dump(2) + "\n";
}

std::string assignment_report_csv(const std::vector<FrameOutcome>& outcomes) {
  std::string out = "clip_id,frame_id,actor_id,classes,objective\n";
  for (const auto& o : outcomes) {
    const std::string objective = o.objective ? format_double(*o.objective) : "";
    for (const auto& a : o.assignments) {
      out += o.clip->annotation.clip_id + "," + std::to_string(o.frame->frame_id) + "," +
             std::to_string(a.actor_id) + "," + classes_text(a.subset) + "," + objective + "\n";
    }
  }
  return out;
}

int run_assign(const AssignOptions& opt, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  const auto file = parse_clip_file(read_text_file(opt.input), {!opt.lenient, &warnings});
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  auto outcomes = assign_all(file, opt);
  std::vector<FrameOutcome> kept;
  for (auto& o : outcomes) {
    if (o.feasible) {
      kept.push_back(std::move(o));
      continue;
    }
    const std::string what = "clip '" + o.clip->annotation.clip_id + "' frame " +
                             std::to_string(o.frame->frame_id) +
                             ": no actors to cover the clip labels";
    if (!opt.skip_infeasible) throw Error(ErrorCode::kInfeasible, what);
    err << "warning: skipping " << what << "\n";
  }
  emit(opt.output,
       opt.report == "csv" ? assignment_report_csv(kept) : assignment_report_json(file, kept, opt), out);
  return kExitOk;
}

// ---- score ----------------------------------------------------------------

struct ScoreOptions {
  std::string input;
  std::string output;
  std::string clip_id;
  bool lenient = false;
  CapOptions caps;
};

int run_score(const ScoreOptions& opt, std::ostream& out, std::ostream& err) {
  std::vector<std::string> warnings;
  const auto file = parse_clip_file(read_text_file(opt.input), {!opt.lenient, &warnings});
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  ordered_json doc;
  doc["format"] = "actorsets-scores";
  doc["version"] = 1;
  doc["actors"] = ordered_json::array();
  bool matched = opt.clip_id.empty();
  for (const auto& clip : file.clips) {
    if (!opt.clip_id.empty() && clip.annotation.clip_id != opt.clip_id) continue;
    matched = true;
    for (const auto& frame : clip.frames) {
      for (const auto& actor : frame.actors) {
        const auto table = score_actor_subsets(actor, clip.annotation.labels, opt.caps.powerset_cap);
        ordered_json a;
        a["clip_id"] = clip.annotation.clip_id;
        a["frame_id"] = frame.frame_id;
        a["actor_id"] = actor.actor_id;
        a["confidence"] = actor.confidence;
        a["subsets"] = ordered_json::array();
        for (Eigen::Index k = 0; k < table.size(); ++k) {
          ordered_json s;
          s["classes"] = table.subsets[static_cast<std::size_t>(k)].classes();
          s["score"] = table.scores(k);
          s["log_score"] = table.log_scores(k);
          a["subsets"].push_back(std::move(s));
        }
        doc["actors"].push_back(std::move(a));
      }
    }
  }
  if (!matched) throw Error(ErrorCode::kInvalidInput, "no clip with id '" + opt.clip_id + "'");
  emit(opt.output, doc.dump(2) + "\n", out);
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalOptions {
  std::string pred;
  std::string gt;
  std::string classes;
  std::string pred_classes;
  std::string output;
  double iou = kDefaultIouThreshold;
  int num_classes = 0;
  bool json = false;
};

int run_eval(const EvalOptions& opt, std::ostream& out) {
  std::vector<std::string> names;
  if (!opt.classes.empty()) names = parse_class_list(read_text_file(opt.classes));
  if (!opt.pred_classes.empty()) {
    const auto pred_names = parse_class_list(read_text_file(opt.pred_classes));
    if (opt.classes.empty()) {
      throw Error(ErrorCode::kInvalidInput, "--pred-classes requires --classes");
    }
    if (pred_names != names) {
      throw Error(ErrorCode::kInvalidInput,
                  "class table mismatch between predictions and ground truth");
    }
  }
  FrameInterner frames;
  std::vector<GroundTruthRecord> gt;
  std::vector<PredictionRecord> pred;
  try {
    gt = parse_ground_truth_csv(read_text_file(opt.gt), frames);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kParse) throw;
    throw Error(e.code(), opt.gt + ": " + e.what());
  }
  try {
    pred = parse_prediction_csv(read_text_file(opt.pred), frames);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kParse) throw;
    throw Error(e.code(), opt.pred + ": " + e.what());
  }

  int class_count = opt.num_classes;
  if (!names.empty()) {
    if (class_count != 0 && class_count != static_cast<int>(names.size())) {
      throw Error(ErrorCode::kInvalidInput, "--num-classes disagrees with the class table");
    }
    class_count = static_cast<int>(names.size());
  }
  if (class_count == 0) {
    for (const auto& g : gt) class_count = std::max(class_count, g.class_id + 1);
    for (const auto& p : pred) class_count = std::max(class_count, p.class_id + 1);
  }
  if (class_count == 0) throw Error(ErrorCode::kEmptyGroundTruth, "empty ground truth: no rows");

  const auto report = mean_average_precision(pred, gt, class_count, opt.iou);
  auto name_of = [&](int c) {
    return names.empty() ? std::to_string(c) : names[static_cast<std::size_t>(c)];
  };
  std::string text;
  if (opt.json) {
    ordered_json doc;
    doc["iou_threshold"] = opt.iou;
    doc["classes"] = ordered_json::array();
    for (int c = 0; c < class_count; ++c) {
      const auto& ap = report.average_precision[static_cast<std::size_t>(c)];
      ordered_json entry;
      entry["class_id"] = c;
      entry["name"] = name_of(c);
      entry["gt_count"] = report.gt_count[static_cast<std::size_t>(c)];
      entry["prediction_count"] = report.prediction_count[static_cast<std::size_t>(c)];
      entry["ap"] = ap ? ordered_json(*ap) : ordered_json(nullptr);
      doc["classes"].push_back(std::move(entry));
    }
    doc["evaluated_classes"] = report.evaluated_classes;
    doc["mAP"] = report.mean_ap;
    text = doc.dump(2) + "\n";
  } else {
    std::ostringstream os;
    os << "class\tname\tgt\tpred\tap\n";
    for (int c = 0; c < class_count; ++c) {
      const auto& ap = report.average_precision[static_cast<std::size_t>(c)];
      os << c << '\t' << name_of(c) << '\t' << report.gt_count[static_cast<std::size_t>(c)] << '\t'
         << report.prediction_count[static_cast<std::size_t>(c)] << '\t';
      if (ap) {
        os << std::fixed << std::setprecision(6) << *ap << std::defaultfloat;
      } else {
        os << '-';
      }
      os << '\n';
    }
    os << "mAP@" << opt.iou << '\t' << std::fixed << std::setprecision(6) << report.mean_ap << " ("
       << report.evaluated_classes << " classes)\n";
    text = os.str();
  }
  emit(opt.output, text, out);
  return kExitOk;
}

// ---- synth / train --------------------------------------------------------

struct SynthOptions {
  std::string config;
  std::string output;
  std::optional<std::uint64_t> seed;
};

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return {};
  return parse_run_config(read_text_file(path));
}

int run_synth(const SynthOptions& opt, std::ostream& out) {
  auto config = load_run_config(opt.config);
  if (opt.seed) config.data.seed = *opt.seed;
  emit(opt.output, serialize_dataset(generate_dataset(config.data)), out);
  return kExitOk;
}

struct TrainOptions {
  std::string config;
  std::string dataset;
  std::string output;
  std::optional<std::string> method;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<int> warmup;
  std::optional<double> alpha;
  std::optional<int> powerset_cap;
  std::optional<int> solver_cap;
};

int run_train(const TrainOptions& opt, std::ostream& out) {
  auto config = load_run_config(opt.config);
  auto& schedule = config.schedule;
  if (opt.seed) {
    config.data.seed = *opt.seed;
    schedule.seed = *opt.seed;
  }
  if (opt.method) schedule.method = parse_method(*opt.method);
  if (opt.epochs) schedule.epochs = *opt.epochs;
  if (opt.warmup) schedule.warmup_epochs = *opt.warmup;
  if (opt.alpha) schedule.alpha = *opt.alpha;
  if (opt.powerset_cap) schedule.powerset_cap = *opt.powerset_cap;
  if (opt.solver_cap) schedule.solver_cap = *opt.solver_cap;

  const SyntheticDataset dataset = opt.dataset.empty()
                                       ? generate_dataset(config.data)
                                       : parse_dataset(read_text_file(opt.dataset));
  auto model = ToyModel::init(dataset.config.feature_dim, dataset.config.class_count, schedule.seed);
  const auto result = train(std::move(model), dataset, schedule);
  const std::string trace = serialize_trace(result, schedule);
  if (opt.output.empty() || opt.output == "-") {
    out << trace;
  } else {
    write_text_file(opt.output, trace);
    out << method_name(schedule.method) << " final val mAP " << std::fixed << std::setprecision(4)
        << 100.0 * result.final_val_map << "\n";
  }
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  return code == ErrorCode::kInfeasible ? kExitInfeasible : kExitDataError;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weakly supervised actor-action association"};
  app.name("actorsets");
  app.require_subcommand(1);

  AssignOptions assign_opt;
  auto* assign = app.add_subcommand("assign", "Assign action subsets to the actors of each frame");
  assign->add_option("-i,--input", assign_opt.input, "Clip file (JSON)")->required();
  assign->add_option("-o,--output", assign_opt.output, "Report path (default stdout)");
  assign->add_option("--report", assign_opt.report, "Report format")
      ->capture_default_str()
      ->check(CLI::IsMember({"json", "csv"}));
  assign->add_flag("--no-lp", assign_opt.no_lp, "Threshold logits instead of solving");
  assign->add_flag("--skip-infeasible", assign_opt.skip_infeasible,
                   "Warn and skip frames that cannot cover their labels");
  assign->add_flag("--lenient", assign_opt.lenient, "Warn on unknown fields instead of failing");
  assign->add_option("-j,--jobs", assign_opt.jobs, "Worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_cap_options(*assign, assign_opt.caps);

  ScoreOptions score_opt;
  auto* score = app.add_subcommand("score", "Dump per-actor subset score tables");
  score->add_option("-i,--input", score_opt.input, "Clip file (JSON)")->required();
  score->add_option("-o,--output", score_opt.output, "Output path (default stdout)");
  score->add_option("--clip", score_opt.clip_id, "Only this clip");
  score->add_flag("--lenient", score_opt.lenient, "Warn on unknown fields instead of failing");
  add_cap_options(*score, score_opt.caps);

  EvalOptions eval_opt;
  auto* eval = app.add_subcommand("eval", "Frame-level mAP of predictions against ground truth");
  eval->add_option("--pred", eval_opt.pred, "Prediction CSV")->required();
  eval->add_option("--gt", eval_opt.gt, "Ground-truth CSV")->required();
  eval->add_option("--iou", eval_opt.iou, "IoU threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  eval->add_option("--num-classes", eval_opt.num_classes, "Class count")
      ->check(CLI::Range(1, 1 << 20));
  eval->add_option("--classes", eval_opt.classes, "Class names, one per line");
  eval->add_option("--pred-classes", eval_opt.pred_classes,
                   "Class names the predictions were made with");
  eval->add_flag("--json", eval_opt.json, "JSON report");
  eval->add_option("-o,--output", eval_opt.output, "Report path (default stdout)");

  SynthOptions synth_opt;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark dataset");
  synth->add_option("--config", synth_opt.config, "Run configuration (JSON)");
  synth->add_option("--seed", synth_opt.seed, "Generator seed");
  synth->add_option("-o,--output", synth_opt.output, "Dataset path (default stdout)");

  TrainOptions train_opt;
  auto* train_cmd = app.add_subcommand("train", "Train the toy model on the synthetic benchmark");
  train_cmd->add_option("--config", train_opt.config, "Run configuration (JSON)");
  train_cmd->add_option("--dataset", train_opt.dataset, "Dataset from 'synth' (default: generate)");
  train_cmd->add_option("--method", train_opt.method, "miml, proposed, no-lp or supervised")
      ->check(CLI::IsMember({"miml", "proposed", "no-lp", "supervised"}));
  train_cmd->add_option("--seed", train_opt.seed, "Seed for data and training");
  train_cmd->add_option("--epochs", train_opt.epochs, "Epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--warmup", train_opt.warmup, "MIML warmup epochs")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--alpha", train_opt.alpha, "Weight of the association loss");
  train_cmd->add_option("--powerset-cap", train_opt.powerset_cap, "Largest label set to enumerate")
      ->check(CLI::Range(1, kMaxClasses));
  train_cmd->add_option("--solver-cap", train_opt.solver_cap, "Largest label set for the exact solver")
      ->check(CLI::Range(1, kMaxClasses));
  train_cmd->add_option("-o,--output", train_opt.output, "Trace path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error[usage]: " << one_line(e.what()) << "\n";
    return kExitUsage;
  }

  try {
    if (*assign) return run_assign(assign_opt, out, err);
    if (*score) return run_score(score_opt, out, err);
    if (*eval) return run_eval(eval_opt, out);
    if (*synth) return run_synth(synth_opt, out);
    if (*train_cmd) return run_train(train_opt, out);
  } catch (const Error& e) {
    err << "error[" << error_code_name(e.code()) << "]: " << one_line(e.what()) << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error[internal]: " << one_line(e.what()) << "\n";
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace actorsets
