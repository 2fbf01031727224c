#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "actorsets/core.hpp"
#include "actorsets/evalmap.hpp"
#include "actorsets/losses.hpp"
#include "actorsets/powerset.hpp"
#include "actorsets/solver.hpp"

namespace actorsets {

// Synthetic multi-actor, multi-label benchmark. Each clip shows a scene whose
// actors share a small vocabulary of actions (the pool, drawn with
// geometrically decaying class frequency); every actor performs a non-empty
// subset of the pool. Actor features are the sum of the prototypes of its
// classes plus Gaussian noise.
struct SyntheticConfig {
  int class_count = 10;
  int train_clips = 300;
  int val_clips = 100;
  int frames_per_clip = 1;
  int min_actors = 2;
  int max_actors = 6;
  int pool_min = 1;
  int pool_max = 2;
  double class_decay = 0.75;      // frequency ratio between successive classes
  double actor_label_rate = 0.5;  // chance an actor performs each pool class
  int feature_dim = 16;
  double separation = 2.0;
  double feature_noise = 1.0;
  double label_noise = 0.0;       // per-clip chance of corrupting the weak labels
  double box_jitter = 0.02;       // stddev of detector box noise, normalized units
  double false_positive_rate = 0.1;  // per-frame chance of a background detection
  double confidence_min = 0.7;
  double confidence_max = 1.0;
  double false_positive_confidence_min = 0.2;
  double false_positive_confidence_max = 0.6;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SyntheticConfig&) const = default;
};

struct SyntheticActor {
  std::int64_t actor_id = 0;
  Eigen::VectorXd features;
  BoundingBox box;            // detector output
  double confidence = 1.0;
  BoundingBox planted_box;    // hidden
  ActionSubset hidden_labels; // hidden; empty for background detections
  bool false_positive = false;
};

struct SyntheticFrame {
  std::int64_t frame_id = 0;
  std::vector<SyntheticActor> actors;
};

struct SyntheticClip {
  std::string clip_id;
  LabelSet weak_labels;
  std::vector<SyntheticFrame> frames;
};

struct SyntheticDataset {
  SyntheticConfig config;
  Eigen::MatrixXd prototypes;  // feature_dim x class_count
  std::vector<SyntheticClip> train;
  std::vector<SyntheticClip> val;
};

SyntheticDataset generate_dataset(const SyntheticConfig& config);

// What a weakly supervised trainer may see of one frame. Hidden labels are
// not part of this view.
struct WeakFrame {
  Eigen::MatrixXd features;     // actors x feature_dim
  Eigen::VectorXd confidences;
  LabelSet weak_labels;
};

std::vector<WeakFrame> weak_view(std::span<const SyntheticClip> clips);

// Per-class linear logit model on fixed actor features.
struct ToyModel {
  Eigen::MatrixXd weights;  // feature_dim x class_count
  Eigen::VectorXd bias;
  Eigen::MatrixXd weight_velocity;
  Eigen::VectorXd bias_velocity;

  static ToyModel init(int feature_dim, int class_count, std::uint64_t seed);
  Eigen::MatrixXd logits(const Eigen::Ref<const Eigen::MatrixXd>& features) const;
};

enum class Method { kMiml, kProposed, kWithoutLp, kSupervised };

std::string_view method_name(Method method);
Method parse_method(std::string_view name);

struct TrainSchedule {
  Method method = Method::kProposed;
  int epochs = 30;
  int warmup_epochs = 10;
  int refresh_every = 1;
  double alpha = kDefaultAlpha;
  double learning_rate = 0.1;
  double momentum = 0.9;
  int lr_step = 20;
  double lr_decay = 0.1;
  int batch_size = 16;
  int powerset_cap = kDefaultPowerSetCap;
  int solver_cap = kDefaultSolverCap;
  std::uint64_t seed = 0;

  bool operator==(const TrainSchedule&) const = default;
};

struct EpochRecord {
  int epoch = 0;
  std::string phase;
  double train_loss = 0.0;
  double val_map = 0.0;
};

struct TrainResult {
  ToyModel model;
  std::vector<EpochRecord> trace;
  double final_val_map = 0.0;
};

// Predictions for every detection and class, scored sigmoid(logit) times the
// detection confidence, against the planted boxes and hidden labels.
EvalReport evaluate_model(const ToyModel& model, std::span<const SyntheticClip> clips,
                          int class_count, double iou_threshold = kDefaultIouThreshold);

// Runs the schedule's method. kMiml trains on the MIML loss only; kProposed
// and kWithoutLp warm up on MIML, then refresh per-actor targets (exact
// assignment or thresholding) every `refresh_every` epochs and train on
// miml + alpha * association; kSupervised trains on per-actor cross entropy
// against the hidden labels.
TrainResult train(ToyModel model, const SyntheticDataset& dataset,
                  const TrainSchedule& schedule);

TrainResult ablate_without_lp(ToyModel model, const SyntheticDataset& dataset,
                              TrainSchedule schedule);

// Subsets assigned to the actors of one weak frame under the given logits.
std::vector<ActionSubset> frame_targets(const WeakFrame& frame,
                                        const Eigen::Ref<const Eigen::MatrixXd>& logits,
                                        Method method, const TrainSchedule& schedule);

}  // namespace actorsets
