#include <gtest/gtest.h>

#include <cmath>

#include "actorsets/evalmap.hpp"
#include "generators.hpp"
#include "oracles.hpp"

namespace actorsets {
namespace {

const BoundingBox kBox{0.1, 0.1, 0.5, 0.5};
const BoundingBox kFar{0.6, 0.6, 0.9, 0.9};

TEST(Iou, Examples) {
  EXPECT_EQ(iou(kBox, kBox), 1.0);
  EXPECT_EQ(iou(kBox, kFar), 0.0);
  EXPECT_EQ(iou({0, 0, 2, 2}, {1, 0, 3, 2}), 1.0 / 3.0);
  EXPECT_EQ(iou({0, 0, 1, 1}, {1, 0, 2, 1}), 0.0);
}

TEST(AveragePrecision, Perfect) {
  const std::vector<GroundTruthRecord> gt{{0, kBox, 0}, {1, kFar, 0}};
  const std::vector<PredictionRecord> pred{{0, kBox, 0, 0.7}, {1, kFar, 0, 0.2}};
  EXPECT_EQ(average_precision(pred, gt, 0), 1.0);
}

TEST(AveragePrecision, FalsePositiveAboveTruePositive) {
  const std::vector<GroundTruthRecord> gt{{0, kBox, 0}};
  const std::vector<PredictionRecord> pred{{0, kFar, 0, 0.9}, {0, kBox, 0, 0.8}};
  EXPECT_EQ(average_precision(pred, gt, 0), 0.5);
}

TEST(AveragePrecision, NoOverlapAndNoGroundTruth) {
  const std::vector<GroundTruthRecord> gt{{0, kBox, 0}};
  const std::vector<PredictionRecord> pred{{0, kFar, 0, 0.9}, {1, kBox, 0, 0.8}};
  EXPECT_EQ(average_precision(pred, gt, 0), 0.0);
  EXPECT_FALSE(average_precision(pred, gt, 1).has_value());
}

TEST(AveragePrecision, EachGroundTruthMatchedOnce) {
  const std::vector<GroundTruthRecord> gt{{0, kBox, 0}};
  const std::vector<PredictionRecord> pred{{0, kBox, 0, 0.9}, {0, kBox, 0, 0.8}};
  EXPECT_EQ(average_precision(pred, gt, 0), 1.0);
  const std::vector<PredictionRecord> reversed{{0, kBox, 0, 0.8}, {0, kBox, 0, 0.9}};
  EXPECT_EQ(average_precision(reversed, gt, 0), 1.0);
}

TEST(AveragePrecision, ThresholdIsInclusive) {
  const std::vector<GroundTruthRecord> gt{{0, {0, 0, 2, 2}, 0}};
  const std::vector<PredictionRecord> pred{{0, {1, 0, 3, 2}, 0, 0.5}};
  EXPECT_EQ(average_precision(pred, gt, 0, 1.0 / 3.0), 1.0);
  EXPECT_EQ(average_precision(pred, gt, 0, 0.34), 0.0);
}

TEST(AveragePrecision, EqualScoresRankedByFrameId) {
  // The frame-0 prediction is a miss; it ranks first among equal scores.
  const std::vector<GroundTruthRecord> gt{{1, kBox, 0}};
  const std::vector<PredictionRecord> pred{{1, kBox, 0, 0.5}, {0, kBox, 0, 0.5}};
  EXPECT_EQ(average_precision(pred, gt, 0), 0.5);
}

TEST(MeanAveragePrecision, Examples) {
  std::vector<GroundTruthRecord> gt;
  std::vector<PredictionRecord> pred;
  for (int c = 0; c < 3; ++c) {
    gt.push_back({c, kBox, c});
    pred.push_back({c, kBox, c, 1.0});
  }
  EXPECT_EQ(mean_average_precision(pred, gt, 3).mean_ap, 1.0);

  const std::vector<GroundTruthRecord> two{{0, kBox, 0}, {0, kFar, 1}};
  const std::vector<PredictionRecord> half{{0, kBox, 0, 0.9}, {0, kBox, 1, 0.9}, {0, kFar, 2, 0.9}};
  const auto report = mean_average_precision(half, two, 3);
  EXPECT_EQ(report.mean_ap, 0.5);
  EXPECT_EQ(report.evaluated_classes, 2);
  EXPECT_FALSE(report.average_precision[2].has_value());
  EXPECT_EQ(report.prediction_count[2], 1);
  EXPECT_EQ(report.gt_count[0], 1);
}

TEST(MeanAveragePrecision, Errors) {
  try {
    mean_average_precision(std::vector<PredictionRecord>{{0, kBox, 0, 0.5}}, {}, 2);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyGroundTruth);
  }
  const std::vector<GroundTruthRecord> gt{{0, kBox, 0}};
  EXPECT_THROW(mean_average_precision(std::vector<PredictionRecord>{{0, kBox, 5, 0.5}}, gt, 2), Error);
  EXPECT_THROW(mean_average_precision(std::vector<PredictionRecord>{{0, kBox, 0, NAN}}, gt, 2), Error);
}

TEST(EvalProperties, MatchesOracle) {
  gen::Rng rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = gen::eval_instance(rng);
    for (int c = 0; c < inst.class_count; ++c) {
      const auto ap = average_precision(inst.predictions, inst.ground_truth, c);
      if (!ap) continue;
      EXPECT_NEAR(*ap, oracle::average_precision(inst.predictions, inst.ground_truth, c, 0.5), 1e-12);
      EXPECT_GE(*ap, 0.0);
      EXPECT_LE(*ap, 1.0);
    }
  }
}

TEST(EvalProperties, OnlyRankMatters) {
  gen::Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = gen::eval_instance(rng);
    const double base = mean_average_precision(inst.predictions, inst.ground_truth, inst.class_count).mean_ap;
    auto transformed = inst.predictions;
    for (auto& p : transformed) p.score = 0.25 * p.score * p.score + 0.1;
    EXPECT_EQ(mean_average_precision(transformed, inst.ground_truth, inst.class_count).mean_ap, base);
  }
}

TEST(EvalProperties, FalsePositiveNeverHelps) {
  gen::Rng rng(43);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = gen::eval_instance(rng);
    for (int c = 0; c < inst.class_count; ++c) {
      const auto before = average_precision(inst.predictions, inst.ground_truth, c);
      if (!before) continue;
      auto preds = inst.predictions;
      preds.push_back({999, gen::box(rng), c, gen::uniform(rng, 0.0, 1.0)});
      EXPECT_LE(*average_precision(preds, inst.ground_truth, c), *before + 1e-15);
    }
  }
}

TEST(EvalProperties, TopRankedTruePositiveNeverHurts) {
  gen::Rng rng(44);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = gen::eval_instance(rng);
    for (int c = 0; c < inst.class_count; ++c) {
      const auto before = average_precision(inst.predictions, inst.ground_truth, c);
      if (!before) continue;
      auto preds = inst.predictions;
      auto gts = inst.ground_truth;
      const auto b = gen::box(rng);
      gts.push_back({999, b, c});
      preds.push_back({999, b, c, 2.0});
      EXPECT_GE(*average_precision(preds, gts, c), *before - 1e-15);
    }
  }
}

// Frame ids only act as keys and as the tie-break order, so any increasing
// relabeling leaves every AP unchanged.
TEST(EvalProperties, IncreasingFrameRelabelingKeepsMap) {
  gen::Rng rng(45);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = gen::eval_instance(rng);
    auto preds = inst.predictions;
    auto gts = inst.ground_truth;
    for (auto& p : preds) p.frame_id = 3 * p.frame_id + 1000;
    for (auto& g : gts) g.frame_id = 3 * g.frame_id + 1000;
    const double base = mean_average_precision(inst.predictions, inst.ground_truth, inst.class_count).mean_ap;
    EXPECT_EQ(mean_average_precision(preds, gts, inst.class_count).mean_ap, base);
  }
}

}  // namespace
}  // namespace actorsets
