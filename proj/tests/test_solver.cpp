#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "actorsets/solver.hpp"
#include "generators.hpp"

namespace actorsets {
namespace {

SubsetScoreTable table(std::int64_t id, Eigen::VectorXd logits, const LabelSet& labels, double d = 1.0) {
  auto t = score_subsets(logits, d, labels);
  t.actor_id = id;
  return t;
}

std::vector<ActionSubset> subsets_of(const AssignmentResult& r) {
  std::vector<ActionSubset> out;
  for (const auto& a : r.assignments) out.push_back(a.subset);
  return out;
}

ActionSubset set(std::initializer_list<int> classes) {
  return ActionSubset::from_classes(std::vector<int>(classes));
}

TEST(SolveAssignment, SingleActorTakesEverything) {
  const LabelSet labels{1, 2};
  const std::vector<SubsetScoreTable> tables{table(0, Eigen::Vector3d(0, 3, -3), labels)};
  const auto r = solve_assignment(tables, labels);
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(subsets_of(r), std::vector<ActionSubset>{set({1, 2})});
}

TEST(SolveAssignment, SingleLabelSharedByAll) {
  const LabelSet labels{1};
  const std::vector<SubsetScoreTable> tables{table(0, Eigen::Vector2d(0, -5), labels, 0.3),
                                             table(1, Eigen::Vector2d(0, 5), labels, 0.9)};
  const auto r = solve_assignment(tables, labels);
  EXPECT_EQ(subsets_of(r), (std::vector<ActionSubset>{set({1}), set({1})}));
  EXPECT_DOUBLE_EQ(r.objective, 0.3 + 0.9);
}

TEST(SolveAssignment, TwoActorsSplitLabels) {
  const LabelSet labels{1, 2};
  const std::vector<SubsetScoreTable> tables{table(0, Eigen::Vector3d(0, 2, -2), labels),
                                             table(1, Eigen::Vector3d(0, -2, 2), labels)};
  const auto r = solve_assignment(tables, labels);
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(subsets_of(r), (std::vector<ActionSubset>{set({1}), set({2})}));
  const double p = std::exp(2.0) / (std::exp(2.0) + std::exp(-2.0) + 1.0);
  EXPECT_NEAR(r.objective, 2.0 * p, 1e-15);
  EXPECT_NEAR(r.objective, 1.7336, 5e-5);
}

TEST(SolveAssignment, SymmetricTieBrokenLexicographically) {
  const LabelSet labels{1, 2};
  const std::vector<SubsetScoreTable> tables{table(0, Eigen::Vector3d::Zero(), labels),
                                             table(1, Eigen::Vector3d::Zero(), labels)};
  const auto r = solve_assignment(tables, labels);
  EXPECT_EQ(subsets_of(r), (std::vector<ActionSubset>{set({1}), set({2})}));
  EXPECT_NEAR(r.objective, 2.0 / 3.0, 1e-15);
  const auto b = brute_force_assignment(tables, labels);
  EXPECT_EQ(b.assignments, r.assignments);
  EXPECT_EQ(b.objective, r.objective);
}

TEST(SolveAssignment, OutputOrderedByActorId) {
  const LabelSet labels{0, 1};
  const std::vector<SubsetScoreTable> tables{table(9, Eigen::Vector2d(-3, 3), labels),
                                             table(2, Eigen::Vector2d(3, -3), labels)};
  const auto r = solve_assignment(tables, labels);
  ASSERT_EQ(r.assignments.size(), 2U);
  EXPECT_EQ(r.assignments[0].actor_id, 2);
  EXPECT_EQ(r.assignments[0].subset, set({0}));
  EXPECT_EQ(r.assignments[1].actor_id, 9);
  EXPECT_EQ(r.assignments[1].subset, set({1}));
}

TEST(SolveAssignment, CoverageOverridesIndividualPreference) {
  // Both actors prefer class 0 alone; coverage forces someone onto class 1.
  const LabelSet labels{0, 1};
  const std::vector<SubsetScoreTable> tables{table(0, Eigen::Vector2d(4, -4), labels, 0.5),
                                             table(1, Eigen::Vector2d(4, -3), labels, 0.9)};
  const auto r = solve_assignment(tables, labels);
  EXPECT_TRUE(satisfies_constraints(r, tables, labels));
  ActionSubset covered;
  for (const auto& a : r.assignments) covered = covered | a.subset;
  EXPECT_EQ(covered, labels.as_subset());
}

TEST(SolveAssignment, DegenerateInputs) {
  const auto empty_labels = solve_assignment({}, LabelSet{});
  EXPECT_TRUE(empty_labels.feasible);
  EXPECT_TRUE(empty_labels.assignments.empty());
  EXPECT_EQ(empty_labels.objective, 0.0);

  const auto no_actors = solve_assignment({}, LabelSet{0, 1});
  EXPECT_FALSE(no_actors.feasible);
  EXPECT_FALSE(brute_force_assignment({}, LabelSet{0}).feasible);
}

TEST(SolveAssignment, CapAndTableMismatch) {
  std::vector<int> many(15);
  std::iota(many.begin(), many.end(), 0);
  const LabelSet big(many);
  const std::vector<SubsetScoreTable> tables{table(0, Eigen::VectorXd::Zero(16), big)};
  try {
    solve_assignment(tables, big);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSolverCapExceeded);
  }
  const std::vector<SubsetScoreTable> other{table(0, Eigen::Vector3d::Zero(), LabelSet{0, 1})};
  EXPECT_THROW(solve_assignment(other, LabelSet{0, 2}), Error);
}

TEST(BruteForce, SearchSpaceBound) {
  const LabelSet labels{0, 1, 2, 3, 4};
  std::vector<SubsetScoreTable> tables;
  for (int i = 0; i < 5; ++i) tables.push_back(table(i, Eigen::VectorXd::Zero(5), labels));
  try {
    brute_force_assignment(tables, labels);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSearchSpaceTooLarge);
  }
}

TEST(BruteForce, SingleActorSingleLabel) {
  const LabelSet labels{1};
  const std::vector<SubsetScoreTable> tables{table(0, Eigen::Vector2d(0.3, -1), labels, 0.42)};
  const auto r = brute_force_assignment(tables, labels);
  EXPECT_EQ(subsets_of(r), std::vector<ActionSubset>{set({1})});
  EXPECT_EQ(r.objective, 0.42);
}

// One actor holding two subsets, or a union that misses a label, must be
// rejected.
TEST(Constraints, RejectsStructuralViolations) {
  const LabelSet labels{0, 1, 2};
  const std::vector<SubsetScoreTable> tables{table(0, Eigen::Vector3d::Zero(), labels),
                                             table(1, Eigen::Vector3d::Zero(), labels)};
  AssignmentResult two_subsets;
  two_subsets.feasible = true;
  two_subsets.assignments = {{0, set({0})}, {0, set({1})}, {1, set({2})}};
  EXPECT_FALSE(satisfies_constraints(two_subsets, tables, labels));

  AssignmentResult duplicated_actor;
  duplicated_actor.feasible = true;
  duplicated_actor.assignments = {{0, set({0, 1})}, {0, set({2})}};
  EXPECT_FALSE(satisfies_constraints(duplicated_actor, tables, labels));

  AssignmentResult misses_label;
  misses_label.feasible = true;
  misses_label.assignments = {{0, set({0})}, {1, set({2})}};
  EXPECT_FALSE(satisfies_constraints(misses_label, tables, labels));

  AssignmentResult empty_subset;
  empty_subset.feasible = true;
  empty_subset.assignments = {{0, set({0, 1, 2})}, {1, ActionSubset()}};
  EXPECT_FALSE(satisfies_constraints(empty_subset, tables, labels));

  AssignmentResult outside;
  outside.feasible = true;
  outside.assignments = {{0, set({0, 1, 2})}, {1, set({5})}};
  EXPECT_FALSE(satisfies_constraints(outside, tables, labels));

  AssignmentResult ok;
  ok.feasible = true;
  ok.assignments = {{0, set({0, 1})}, {1, set({1, 2})}};
  EXPECT_TRUE(satisfies_constraints(ok, tables, labels));
}

TEST(SolverProperties, MatchesBruteForceOracle) {
  gen::Rng rng(21);
  for (int trial = 0; trial < 600; ++trial) {
    const auto inst = gen::solver_instance(rng, gen::uniform_int(rng, 1, 4), gen::uniform_int(rng, 1, 4));
    const auto dp = solve_assignment(inst.tables, inst.labels);
    const auto bf = brute_force_assignment(inst.tables, inst.labels);
    ASSERT_TRUE(dp.feasible);
    EXPECT_EQ(dp.objective, bf.objective) << "trial " << trial;
    EXPECT_EQ(dp.assignments, bf.assignments) << "trial " << trial;
    EXPECT_TRUE(satisfies_constraints(dp, inst.tables, inst.labels));
  }
}

TEST(SolverProperties, TiesOnQuantizedScores) {
  // Coarse logits and unit confidences produce many exact ties.
  gen::Rng rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = gen::uniform_int(rng, 1, 3);
    const auto labels = gen::labels(rng, 4, k);
    std::vector<SubsetScoreTable> tables;
    const int n = gen::uniform_int(rng, 1, 4);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd s(4);
      for (int c = 0; c < 4; ++c) s(c) = gen::uniform_int(rng, -1, 1);
      tables.push_back(table(i, s, labels));
    }
    const auto dp = solve_assignment(tables, labels);
    const auto bf = brute_force_assignment(tables, labels);
    EXPECT_EQ(dp.objective, bf.objective);
    EXPECT_EQ(dp.assignments, bf.assignments);
  }
}

TEST(SolverProperties, AddingAnActorNeverLowersTheOptimum) {
  gen::Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = gen::solver_instance(rng, gen::uniform_int(rng, 1, 5), gen::uniform_int(rng, 1, 6));
    const double before = solve_assignment(inst.tables, inst.labels).objective;
    auto extra = table(1000, gen::logits(rng, 8, -4, 4), inst.labels, gen::uniform(rng, 0.0, 1.0));
    inst.tables.push_back(std::move(extra));
    EXPECT_GE(solve_assignment(inst.tables, inst.labels).objective, before);
  }
}

TEST(SolverProperties, ConfidenceScaling) {
  gen::Rng rng(24);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = gen::solver_instance(rng, gen::uniform_int(rng, 1, 5), gen::uniform_int(rng, 1, 5));
    const auto base = solve_assignment(inst.tables, inst.labels);
    for (double lambda : {0.5, 2.0, 0.37}) {
      std::vector<SubsetScoreTable> scaled;
      for (const auto& actor : inst.actors) {
        auto a = actor;
        a.confidence *= lambda;
        scaled.push_back(score_actor_subsets(a, inst.labels));
      }
      const auto r = solve_assignment(scaled, inst.labels);
      EXPECT_EQ(r.assignments, base.assignments);
      EXPECT_NEAR(r.objective, lambda * base.objective, 1e-12 * std::max(1.0, base.objective));
    }
  }
}

TEST(SolverProperties, PermutingInputTablesChangesNothing) {
  gen::Rng rng(25);
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = gen::solver_instance(rng, gen::uniform_int(rng, 2, 6), gen::uniform_int(rng, 1, 6));
    const auto base = solve_assignment(inst.tables, inst.labels);
    std::shuffle(inst.tables.begin(), inst.tables.end(), rng);
    const auto r = solve_assignment(inst.tables, inst.labels);
    EXPECT_EQ(r.objective, base.objective);
    EXPECT_EQ(r.assignments, base.assignments);
  }
}

TEST(SolverProperties, ThirtyActorsTenLabelsIsFast) {
  gen::Rng rng(26);
  const auto inst = gen::solver_instance(rng, 30, 10, 12);
  const auto start = std::chrono::steady_clock::now();
  const auto r = solve_assignment(inst.tables, inst.labels);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_TRUE(satisfies_constraints(r, inst.tables, inst.labels));
  EXPECT_LT(seconds, 1.0);
}

TEST(AssignWithoutLp, ThresholdSemantics) {
  const LabelSet labels{0, 1};
  EXPECT_EQ(threshold_subset(Eigen::Vector2d(1.2, -0.3), labels), set({0}));
  EXPECT_TRUE(threshold_subset(Eigen::Vector2d(-1, -0.1), labels).empty());
  EXPECT_EQ(threshold_subset(Eigen::Vector2d(0.0, 2.0), labels), set({1}));
  // Classes outside L are ignored even with positive logits.
  EXPECT_EQ(threshold_subset(Eigen::Vector3d(-1, 1, 5), labels), set({1}));

  Eigen::MatrixXd logits(2, 3);
  logits << 1, -1, 2, -1, -1, -1;
  const auto out = assign_without_lp(logits, labels);
  EXPECT_EQ(out, (std::vector<ActionSubset>{set({0}), ActionSubset()}));
}

}  // namespace
}  // namespace actorsets
