#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "actorsets/core.hpp"
#include "actorsets/powerset.hpp"

namespace actorsets {

inline constexpr int kDefaultSolverCap = 14;
inline constexpr double kBruteForceLimit = 1e7;

// Set of labels of L (local indices) already covered by the assigned subsets.
struct CoverageState {
  std::uint64_t mask = 0;
};

// Assigns one non-empty subset of L to every actor, maximizing the summed
// subset scores subject to every label of L being covered by at least one
// actor.
//
// Actors are processed in ascending actor_id. The objective is accumulated
// from the last actor backwards, p_1 + (p_2 + (... + p_n)), so it is the same
// double brute_force_assignment computes. Among assignments with equal
// objective the lexicographically smallest sequence of subset bits wins.
//
// n = 0 with non-empty L yields feasible == false. Empty L yields an empty,
// feasible assignment with objective 0.
AssignmentResult solve_assignment(std::span<const SubsetScoreTable> tables,
                                  const LabelSet& labels,
                                  int cap = kDefaultSolverCap);

// Exhaustive enumeration with the same summation order and tie-break.
// Throws kSearchSpaceTooLarge when (2^|L| - 1)^n exceeds kBruteForceLimit.
AssignmentResult brute_force_assignment(std::span<const SubsetScoreTable> tables,
                                        const LabelSet& labels);

// Independent per-actor thresholding: class c in L is kept iff its logit is
// strictly positive (sigmoid > 0.5). No coverage or non-emptiness constraint.
ActionSubset threshold_subset(const Eigen::Ref<const Eigen::VectorXd>& logits,
                              const LabelSet& labels);

std::vector<ActionSubset> assign_without_lp(
    std::span<const ActorDetection> actors, const LabelSet& labels);

// Rows are actors, columns classes.
std::vector<ActionSubset> assign_without_lp(
    const Eigen::Ref<const Eigen::MatrixXd>& logits, const LabelSet& labels);

// True iff the result gives each actor exactly one non-empty subset of L and
// the union covers L.
bool satisfies_constraints(const AssignmentResult& result,
                           std::span<const SubsetScoreTable> tables,
                           const LabelSet& labels);

}  // namespace actorsets
