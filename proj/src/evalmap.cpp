#include "actorsets/evalmap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace actorsets {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

std::optional<double> average_precision(std::span<const PredictionRecord> predictions,
                                        std::span<const GroundTruthRecord> ground_truth,
                                        int class_id, double iou_threshold) {
  std::map<std::int64_t, std::vector<std::size_t>> gt_by_frame;
  std::size_t gt_total = 0;
  for (std::size_t g = 0; g < ground_truth.size(); ++g) {
    if (ground_truth[g].class_id != class_id) continue;
    gt_by_frame[ground_truth[g].frame_id].push_back(g);
    ++gt_total;
  }
  if (gt_total == 0) return std::nullopt;

  std::vector<std::size_t> ranked;
  for (std::size_t p = 0; p < predictions.size(); ++p) {
    if (predictions[p].class_id == class_id) ranked.push_back(p);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = predictions[a];
    const auto& pb = predictions[b];
    if (pa.score != pb.score) return pa.score > pb.score;
    return pa.frame_id < pb.frame_id;
  });

  std::vector<bool> matched(ground_truth.size(), false);
  std::vector<double> precision;
  std::vector<double> recall;
  precision.reserve(ranked.size());
  recall.reserve(ranked.size());
  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
    const auto& pred = predictions[ranked[rank]];
    const auto frame = gt_by_frame.find(pred.frame_id);
    if (frame != gt_by_frame.end()) {
      double best_iou = -1.0;
      std::size_t best = 0;
      for (std::size_t g : frame->second) {
        if (matched[g]) continue;
        const double overlap = iou(pred.box, ground_truth[g].box);
        if (overlap > best_iou) {
          best_iou = overlap;
          best = g;
        }
      }
      if (best_iou >= iou_threshold) {
        matched[best] = true;
        ++tp;
      }
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(rank + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(gt_total));
  }

  // Precision envelope, then area over recall steps.
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double previous_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    if (recall[i] != previous_recall) {
      ap += (recall[i] - previous_recall) * precision[i];
      previous_recall = recall[i];
    }
  }
  return std::clamp(ap, 0.0, 1.0);
}

EvalReport mean_average_precision(std::span<const PredictionRecord> predictions,
                                  std::span<const GroundTruthRecord> ground_truth,
                                  int class_count, double iou_threshold) {
  if (class_count <= 0) {
    throw Error(ErrorCode::kInvalidInput, "class count must be positive");
  }
  EvalReport report;
  report.average_precision.assign(static_cast<std::size_t>(class_count), std::nullopt);
  report.gt_count.assign(static_cast<std::size_t>(class_count), 0);
  report.prediction_count.assign(static_cast<std::size_t>(class_count), 0);
  for (const auto& gt : ground_truth) {
    if (gt.class_id < 0 || gt.class_id >= class_count) {
      throw Error(ErrorCode::kInvalidInput,
                  "ground truth class id " + std::to_string(gt.class_id) + " out of range");
    }
    ++report.gt_count[static_cast<std::size_t>(gt.class_id)];
  }
  for (const auto& pred : predictions) {
    if (pred.class_id < 0 || pred.class_id >= class_count) {
      throw Error(ErrorCode::kInvalidInput,
                  "prediction class id " + std::to_string(pred.class_id) + " out of range");
    }
    if (!std::isfinite(pred.score)) {
      throw Error(ErrorCode::kInvalidInput, "non-finite prediction score");
    }
    ++report.prediction_count[static_cast<std::size_t>(pred.class_id)];
  }

  double sum = 0.0;
  for (int c = 0; c < class_count; ++c) {
    if (report.gt_count[static_cast<std::size_t>(c)] == 0) continue;
    const auto ap = average_precision(predictions, ground_truth, c, iou_threshold);
    report.average_precision[static_cast<std::size_t>(c)] = ap;
    sum += *ap;
    ++report.evaluated_classes;
  }
  if (report.evaluated_classes == 0) {
    throw Error(ErrorCode::kEmptyGroundTruth, "empty ground truth: no class has an instance");
  }
  report.mean_ap = sum / report.evaluated_classes;
  return report;
}

}  // namespace actorsets
