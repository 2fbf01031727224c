#include "actorsets/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/QR>

namespace actorsets {

void SyntheticConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidInput, "invalid synthetic config: " + what);
  };
  if (class_count < 1 || class_count > kMaxClasses) fail("class_count must be in [1, 64]");
  if (train_clips < 1 || val_clips < 1) fail("train_clips and val_clips must be positive");
  if (frames_per_clip < 1) fail("frames_per_clip must be positive");
  if (min_actors < 1 || max_actors < min_actors) fail("need 1 <= min_actors <= max_actors");
  if (pool_min < 1 || pool_max < pool_min || pool_max > class_count) {
    fail("need 1 <= pool_min <= pool_max <= class_count");
  }
  if (feature_dim < 1) fail("feature_dim must be positive");
  if (!(separation >= 0.0) || !(feature_noise >= 0.0) || !(box_jitter >= 0.0)) {
    fail("separation, feature_noise and box_jitter must be non-negative");
  }
  if (!(class_decay > 0.0 && class_decay <= 1.0)) fail("class_decay must be in (0, 1]");
  for (double rate : {actor_label_rate, label_noise, false_positive_rate, confidence_min,
                      confidence_max, false_positive_confidence_min,
                      false_positive_confidence_max}) {
    if (!(rate >= 0.0 && rate <= 1.0)) fail("rates and confidences must lie in [0, 1]");
  }
  if (confidence_min > confidence_max ||
      false_positive_confidence_min > false_positive_confidence_max) {
    fail("confidence ranges must be ordered");
  }
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool bernoulli(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

Eigen::VectorXd gaussian(Rng& rng, int dim, double stddev) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = stddev * normal(rng);
  return v;
}

// Unit-norm class prototypes; orthonormal when feature_dim >= class_count.
Eigen::MatrixXd make_prototypes(const SyntheticConfig& cfg, Rng& rng) {
  Eigen::MatrixXd raw(cfg.feature_dim, cfg.class_count);
  for (int c = 0; c < cfg.class_count; ++c) raw.col(c) = gaussian(rng, cfg.feature_dim, 1.0);
  if (cfg.feature_dim >= cfg.class_count) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    return qr.householderQ() * Eigen::MatrixXd::Identity(cfg.feature_dim, cfg.class_count);
  }
  return raw.colwise().normalized();
}

BoundingBox jitter_box(const BoundingBox& box, double sigma, Rng& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  BoundingBox out{box.x1 + normal(rng), box.y1 + normal(rng), box.x2 + normal(rng),
                  box.y2 + normal(rng)};
  out.x1 = std::clamp(out.x1, 0.0, 0.98);
  out.y1 = std::clamp(out.y1, 0.0, 0.98);
  out.x2 = std::clamp(out.x2, out.x1 + 0.01, 1.0);
  out.y2 = std::clamp(out.y2, out.y1 + 0.01, 1.0);
  return out;
}

std::vector<ActionSubset> draw_actor_labels(const SyntheticConfig& cfg, int actors, Rng& rng) {
  std::vector<double> weights;
  double weight = 1.0;
  for (int c = 0; c < cfg.class_count; ++c) {
    weights.push_back(weight);
    weight *= cfg.class_decay;
  }
  // Pool classes are drawn without replacement.
  const int pool_size = uniform_int(rng, cfg.pool_min, cfg.pool_max);
  std::vector<int> pool;
  while (static_cast<int>(pool.size()) < pool_size) {
    std::discrete_distribution<int> pick(weights.begin(), weights.end());
    const int c = pick(rng);
    pool.push_back(c);
    weights[static_cast<std::size_t>(c)] = 0.0;
  }

  std::vector<ActionSubset> out;
  out.reserve(static_cast<std::size_t>(actors));
  for (int a = 0; a < actors; ++a) {
    ActionSubset::Bits bits = 0;
    for (int c : pool) {
      if (bernoulli(rng, cfg.actor_label_rate)) bits |= ActionSubset::Bits{1} << c;
    }
    if (bits == 0) bits = ActionSubset::Bits{1} << pool[static_cast<std::size_t>(uniform_int(rng, 0, pool_size - 1))];
    out.emplace_back(bits);
  }
  return out;
}

SyntheticClip make_clip(const SyntheticConfig& cfg, const Eigen::MatrixXd& prototypes,
                        const std::string& clip_id, std::int64_t& next_frame_id, Rng& rng) {
  SyntheticClip clip;
  clip.clip_id = clip_id;
  const int actors = uniform_int(rng, cfg.min_actors, cfg.max_actors);
  const auto labels = draw_actor_labels(cfg, actors, rng);
  // Actors occupy side-by-side slots so planted boxes do not overlap.
  std::vector<BoundingBox> planted;
  for (int a = 0; a < actors; ++a) {
    const double slot = 1.0 / actors;
    const double x1 = a * slot + uniform(rng, 0.05, 0.2) * slot;
    const double x2 = (a + 1) * slot - uniform(rng, 0.05, 0.2) * slot;
    const double y1 = uniform(rng, 0.05, 0.35);
    const double y2 = uniform(rng, 0.65, 0.95);
    planted.push_back({x1, y1, x2, y2});
  }

  ActionSubset union_labels;
  for (const auto& s : labels) union_labels = union_labels | s;

  for (int f = 0; f < cfg.frames_per_clip; ++f) {
    SyntheticFrame frame;
    frame.frame_id = next_frame_id++;
    for (int a = 0; a < actors; ++a) {
      SyntheticActor actor;
      actor.actor_id = a;
      actor.hidden_labels = labels[static_cast<std::size_t>(a)];
      actor.features = gaussian(rng, cfg.feature_dim, cfg.feature_noise);
      for (int c : actor.hidden_labels.classes()) {
        actor.features += cfg.separation * prototypes.col(c);
      }
      actor.planted_box = planted[static_cast<std::size_t>(a)];
      actor.box = jitter_box(actor.planted_box, cfg.box_jitter, rng);
      actor.confidence = uniform(rng, cfg.confidence_min, cfg.confidence_max);
      frame.actors.push_back(std::move(actor));
    }
    if (bernoulli(rng, cfg.false_positive_rate)) {
      SyntheticActor actor;
      actor.actor_id = actors;
      actor.false_positive = true;
      actor.features = gaussian(rng, cfg.feature_dim, cfg.feature_noise);
      const double x1 = uniform(rng, 0.0, 0.8);
      const double y1 = uniform(rng, 0.0, 0.8);
      actor.planted_box = {x1, y1, x1 + uniform(rng, 0.05, 0.2), y1 + uniform(rng, 0.05, 0.2)};
      actor.box = actor.planted_box;
      actor.confidence = uniform(rng, cfg.false_positive_confidence_min,
                                 cfg.false_positive_confidence_max);
      frame.actors.push_back(std::move(actor));
    }
    clip.frames.push_back(std::move(frame));
  }

  std::vector<int> weak = union_labels.classes();
  if (cfg.label_noise > 0.0 && bernoulli(rng, cfg.label_noise)) {
    const bool drop = weak.size() > 1 && bernoulli(rng, 0.5);
    if (drop) {
      weak.erase(weak.begin() + uniform_int(rng, 0, static_cast<int>(weak.size()) - 1));
    } else {
      const int extra = uniform_int(rng, 0, cfg.class_count - 1);
      weak.push_back(extra);
    }
  }
  clip.weak_labels = LabelSet(std::move(weak));
  return clip;
}

std::string clip_name(const char* split, int index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return std::string(split) + "-" + digits;
}

}  // namespace

SyntheticDataset generate_dataset(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);
  SyntheticDataset data;
  data.config = config;
  data.prototypes = make_prototypes(config, rng);
  std::int64_t next_frame_id = 0;
  for (int i = 0; i < config.train_clips; ++i) {
    data.train.push_back(make_clip(config, data.prototypes, clip_name("train", i), next_frame_id, rng));
  }
  for (int i = 0; i < config.val_clips; ++i) {
    data.val.push_back(make_clip(config, data.prototypes, clip_name("val", i), next_frame_id, rng));
  }
  return data;
}

namespace {

WeakFrame to_weak(const SyntheticFrame& frame, const LabelSet& weak_labels) {
  WeakFrame out;
  const auto n = static_cast<Eigen::Index>(frame.actors.size());
  const Eigen::Index dim = n > 0 ? frame.actors.front().features.size() : 0;
  out.features.resize(n, dim);
  out.confidences.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.features.row(i) = frame.actors[static_cast<std::size_t>(i)].features.transpose();
    out.confidences(i) = frame.actors[static_cast<std::size_t>(i)].confidence;
  }
  out.weak_labels = weak_labels;
  return out;
}

}  // namespace

std::vector<WeakFrame> weak_view(std::span<const SyntheticClip> clips) {
  std::vector<WeakFrame> out;
  for (const auto& clip : clips) {
    for (const auto& frame : clip.frames) out.push_back(to_weak(frame, clip.weak_labels));
  }
  return out;
}

ToyModel ToyModel::init(int feature_dim, int class_count, std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  ToyModel model;
  model.weights.resize(feature_dim, class_count);
  std::normal_distribution<double> normal(0.0, 0.01);
  for (Eigen::Index c = 0; c < model.weights.cols(); ++c) {
    for (Eigen::Index f = 0; f < model.weights.rows(); ++f) model.weights(f, c) = normal(rng);
  }
  model.bias = Eigen::VectorXd::Zero(class_count);
  model.weight_velocity = Eigen::MatrixXd::Zero(feature_dim, class_count);
  model.bias_velocity = Eigen::VectorXd::Zero(class_count);
  return model;
}

Eigen::MatrixXd ToyModel::logits(const Eigen::Ref<const Eigen::MatrixXd>& features) const {
  return (features * weights).rowwise() + bias.transpose();
}

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kMiml: return "miml";
    case Method::kProposed: return "proposed";
    case Method::kWithoutLp: return "no-lp";
    case Method::kSupervised: return "supervised";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kMiml, Method::kProposed, Method::kWithoutLp, Method::kSupervised}) {
    if (method_name(m) == name) return m;
  }
  throw Error(ErrorCode::kInvalidInput, "unknown method '" + std::string(name) + "'");
}

EvalReport evaluate_model(const ToyModel& model, std::span<const SyntheticClip> clips,
                          int class_count, double iou_threshold) {
  std::vector<PredictionRecord> predictions;
  std::vector<GroundTruthRecord> ground_truth;
  for (const auto& clip : clips) {
    for (const auto& frame : clip.frames) {
      for (const auto& actor : frame.actors) {
        const Eigen::VectorXd s = model.logits(actor.features.transpose()).row(0).transpose();
        const Eigen::VectorXd p = sigmoid(s);
        for (int c = 0; c < class_count; ++c) {
          predictions.push_back({frame.frame_id, actor.box, c, p(c) * actor.confidence});
        }
        for (int c : actor.hidden_labels.classes()) {
          ground_truth.push_back({frame.frame_id, actor.planted_box, c});
        }
      }
    }
  }
  return mean_average_precision(predictions, ground_truth, class_count, iou_threshold);
}

std::vector<ActionSubset> frame_targets(const WeakFrame& frame,
                                        const Eigen::Ref<const Eigen::MatrixXd>& logits,
                                        Method method, const TrainSchedule& schedule) {
  const auto n = static_cast<std::size_t>(logits.rows());
  if (n == 0 || frame.weak_labels.empty()) return {};
  if (method == Method::kWithoutLp) return assign_without_lp(logits, frame.weak_labels);

  std::vector<SubsetScoreTable> tables;
  tables.reserve(n);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    auto table = score_subsets(logits.row(i).transpose(), frame.confidences(i),
                               frame.weak_labels, schedule.powerset_cap);
    table.actor_id = i;
    tables.push_back(std::move(table));
  }
  const auto result = solve_assignment(tables, frame.weak_labels, schedule.solver_cap);
  std::vector<ActionSubset> out;
  out.reserve(n);
  for (const auto& entry : result.assignments) out.push_back(entry.subset);
  return out;
}

namespace {

struct TrainingFrame {
  WeakFrame weak;
  std::vector<ActionSubset> targets;
  Eigen::VectorXd bag_targets;
};

// Hidden labels enter training only through this function, and only for the
// supervised method.
std::vector<std::vector<ActionSubset>> supervised_targets(std::span<const SyntheticClip> clips) {
  std::vector<std::vector<ActionSubset>> out;
  for (const auto& clip : clips) {
    for (const auto& frame : clip.frames) {
      std::vector<ActionSubset> targets;
      for (const auto& actor : frame.actors) targets.push_back(actor.hidden_labels);
      out.push_back(std::move(targets));
    }
  }
  return out;
}

double supervised_loss(const Eigen::MatrixXd& logits, std::span<const ActionSubset> targets,
                       Eigen::MatrixXd& grad) {
  const Eigen::MatrixXd probs = sigmoid_probs(logits);
  const Eigen::MatrixXd sig = sigmoid(logits);
  grad.resize(logits.rows(), logits.cols());
  const double inv_c = 1.0 / static_cast<double>(logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      const double y = targets[static_cast<std::size_t>(i)].contains(static_cast<int>(c)) ? 1.0 : 0.0;
      grad(i, c) = (sig(i, c) - y) * inv_c;
    }
  }
  return association_loss(targets, probs);
}

}  // namespace

TrainResult train(ToyModel model, const SyntheticDataset& dataset, const TrainSchedule& schedule) {
  const int classes = dataset.config.class_count;
  if (model.weights.cols() != classes || model.weights.rows() != dataset.config.feature_dim) {
    throw Error(ErrorCode::kInvalidInput, "model shape does not match the dataset");
  }
  if (schedule.epochs < 1 || schedule.batch_size < 1 || schedule.refresh_every < 1 ||
      schedule.warmup_epochs < 0) {
    throw Error(ErrorCode::kInvalidInput, "invalid training schedule");
  }

  std::vector<TrainingFrame> frames;
  for (auto& weak : weak_view(dataset.train)) {
    TrainingFrame frame;
    frame.bag_targets = subset_targets(weak.weak_labels.as_subset(), classes);
    frame.weak = std::move(weak);
    frames.push_back(std::move(frame));
  }
  if (schedule.method == Method::kSupervised) {
    auto targets = supervised_targets(dataset.train);
    for (std::size_t f = 0; f < frames.size(); ++f) frames[f].targets = std::move(targets[f]);
  }

  Rng rng(schedule.seed);
  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    const double lr =
        schedule.learning_rate * std::pow(schedule.lr_decay, schedule.lr_step > 0 ? epoch / schedule.lr_step : 0);
    const bool weak_assign = schedule.method == Method::kProposed || schedule.method == Method::kWithoutLp;
    const bool assigning = weak_assign && epoch >= schedule.warmup_epochs;
    std::string phase;
    switch (schedule.method) {
      case Method::kMiml: phase = "miml"; break;
      case Method::kSupervised: phase = "supervised"; break;
      default: phase = assigning ? "assign" : "warmup"; break;
    }

    if (assigning && (epoch - schedule.warmup_epochs) % schedule.refresh_every == 0) {
      for (auto& frame : frames) {
        if (frame.weak.features.rows() == 0) continue;
        frame.targets = frame_targets(frame.weak, model.logits(frame.weak.features),
                                      schedule.method, schedule);
      }
    }

    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(schedule.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(schedule.batch_size));
      Eigen::MatrixXd grad_w = Eigen::MatrixXd::Zero(model.weights.rows(), classes);
      Eigen::VectorXd grad_b = Eigen::VectorXd::Zero(classes);
      std::size_t batch = 0;
      for (std::size_t k = start; k < stop; ++k) {
        const auto& frame = frames[order[k]];
        if (frame.weak.features.rows() == 0) continue;
        const Eigen::MatrixXd logits = model.logits(frame.weak.features);
        double loss = 0.0;
        Eigen::MatrixXd grad;
        if (schedule.method == Method::kSupervised) {
          loss = supervised_loss(logits, frame.targets, grad);
        } else {
          const std::span<const ActionSubset> assigned =
              assigning ? std::span<const ActionSubset>(frame.targets) : std::span<const ActionSubset>();
          const auto breakdown = combined_loss(frame.bag_targets, logits, assigned, schedule.alpha);
          loss = breakdown.combined;
          grad = breakdown.gradient;
        }
        if (!std::isfinite(loss) || !grad.allFinite()) {
          throw Error(ErrorCode::kDivergence,
                      "non-finite loss at epoch " + std::to_string(epoch) + ", frame " +
                          std::to_string(order[k]));
        }
        loss_sum += loss;
        ++counted;
        ++batch;
        grad_w.noalias() += frame.weak.features.transpose() * grad;
        grad_b += grad.colwise().sum().transpose();
      }
      if (batch == 0) continue;
      const double scale = 1.0 / static_cast<double>(batch);
      model.weight_velocity = schedule.momentum * model.weight_velocity - lr * scale * grad_w;
      model.bias_velocity = schedule.momentum * model.bias_velocity - lr * scale * grad_b;
      model.weights += model.weight_velocity;
      model.bias += model.bias_velocity;
    }
    if (!model.weights.allFinite() || !model.bias.allFinite()) {
      throw Error(ErrorCode::kDivergence, "non-finite parameters after epoch " + std::to_string(epoch));
    }

    EpochRecord record;
    record.epoch = epoch;
    record.phase = phase;
    record.train_loss = counted > 0 ? loss_sum / static_cast<double>(counted) : 0.0;
    record.val_map = evaluate_model(model, dataset.val, classes).mean_ap;
    result.trace.push_back(record);
  }
  result.final_val_map = result.trace.back().val_map;
  result.model = std::move(model);
  return result;
}

TrainResult ablate_without_lp(ToyModel model, const SyntheticDataset& dataset,
                              TrainSchedule schedule) {
  schedule.method = Method::kWithoutLp;
  return train(std::move(model), dataset, schedule);
}

}  // namespace actorsets
