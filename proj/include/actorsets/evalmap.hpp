#pragma once

#include <optional>
#include <span>
#include <vector>

#include "actorsets/core.hpp"

namespace actorsets {

inline constexpr double kDefaultIouThreshold = 0.5;

struct EvalReport {
  std::vector<std::optional<double>> average_precision;  // empty when no GT
  std::vector<int> gt_count;
  std::vector<int> prediction_count;
  double mean_ap = 0.0;  // unweighted mean over classes with GT
  int evaluated_classes = 0;
};

double iou(const BoundingBox& a, const BoundingBox& b);

// Frame-level AP for one class. Predictions are ranked by descending score,
// then ascending frame_id, then input order; each is matched greedily to the
// unmatched same-frame ground truth of highest IoU (at least the threshold).
// AP is the area under the precision envelope over all recall points.
// Returns nullopt when the class has no ground truth.
std::optional<double> average_precision(std::span<const PredictionRecord> predictions,
                                        std::span<const GroundTruthRecord> ground_truth,
                                        int class_id,
                                        double iou_threshold = kDefaultIouThreshold);

// Throws kEmptyGroundTruth when no class has ground truth and
// kInvalidInput for class ids outside [0, class_count) or non-finite scores.
EvalReport mean_average_precision(std::span<const PredictionRecord> predictions,
                                  std::span<const GroundTruthRecord> ground_truth,
                                  int class_count,
                                  double iou_threshold = kDefaultIouThreshold);

}  // namespace actorsets
