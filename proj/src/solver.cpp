#include "actorsets/solver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace actorsets {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<std::size_t> order_by_actor_id(std::span<const SubsetScoreTable> tables) {
  std::vector<std::size_t> order(tables.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return tables[a].actor_id < tables[b].actor_id;
  });
  return order;
}

void check_tables(std::span<const SubsetScoreTable> tables, const LabelSet& labels) {
  const auto expected = static_cast<Eigen::Index>((std::uint64_t{1} << labels.size()) - 1);
  for (const auto& table : tables) {
    if (table.labels != labels || table.size() != expected) {
      throw Error(ErrorCode::kInvalidInput,
                  "score table of actor " + std::to_string(table.actor_id) +
                      " does not cover the clip's power set");
    }
  }
}

// Maps doubles onto integers so that integer order is numeric order.
std::int64_t order_key(double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  const auto magnitude = static_cast<std::int64_t>(bits & 0x7fffffffffffffffULL);
  return (bits >> 63) != 0 ? -magnitude : magnitude;
}

double from_order_key(std::int64_t key) {
  if (key >= 0) return std::bit_cast<double>(static_cast<std::uint64_t>(key));
  return std::bit_cast<double>(static_cast<std::uint64_t>(-key) | 0x8000000000000000ULL);
}

// Smallest y with fl(p + y) >= target. fl(p + y) is non-decreasing in y, so
// a binary search over the ordered doubles finds the boundary exactly.
double min_addend(double p, double target) {
  std::int64_t lo = order_key(kNegInf);
  std::int64_t hi = order_key(std::numeric_limits<double>::infinity());
  if (p + from_order_key(lo) >= target) return kNegInf;
  while (lo < hi - 1) {
    const std::int64_t mid = std::midpoint(lo, hi);
    if (p + from_order_key(mid) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return from_order_key(hi);
}

AssignmentResult trivial_result(std::span<const SubsetScoreTable> tables,
                                const LabelSet& labels, bool& handled) {
  handled = true;
  AssignmentResult result;
  if (labels.empty()) {
    result.feasible = true;
    result.objective = 0.0;
    return result;
  }
  if (tables.empty()) {
    result.feasible = false;
    result.objective = kNegInf;
    return result;
  }
  handled = false;
  return result;
}

AssignmentResult make_result(std::span<const SubsetScoreTable> tables,
                             const std::vector<std::size_t>& order,
                             const std::vector<std::uint64_t>& local_choice,
                             const LabelSet& labels, double objective) {
  AssignmentResult result;
  result.feasible = true;
  result.objective = objective;
  result.assignments.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    result.assignments.push_back(
        {tables[order[i]].actor_id, labels.expand(local_choice[i])});
  }
  return result;
}

}  // namespace

AssignmentResult solve_assignment(std::span<const SubsetScoreTable> tables,
                                  const LabelSet& labels, int cap) {
  bool handled = false;
  auto early = trivial_result(tables, labels, handled);
  if (handled) return early;
  if (labels.size() > cap) {
    throw Error(ErrorCode::kSolverCapExceeded,
                "|L| = " + std::to_string(labels.size()) +
                    " exceeds solver cap " + std::to_string(cap));
  }
  check_tables(tables, labels);

  const auto order = order_by_actor_id(tables);
  const int k = labels.size();
  const std::size_t n = order.size();
  const std::uint64_t states = std::uint64_t{1} << k;
  const std::uint64_t full = states - 1;

  std::vector<std::uint64_t> pow3(static_cast<std::size_t>(k) + 1, 1);
  for (int b = 1; b <= k; ++b) pow3[b] = pow3[b - 1] * 3;
  // tern[mask]: base-3 number with digit 1 at every bit of mask. An interval
  // lo ⊆ hi of the subset lattice is stored at tern[hi] + tern[lo].
  std::vector<std::uint64_t> tern(states, 0);
  for (std::uint64_t mask = 1; mask < states; ++mask) {
    const int low = std::countr_zero(mask);
    tern[mask] = tern[mask & (mask - 1)] + pow3[static_cast<std::size_t>(low)];
  }

  // best_suffix[i][m]: best objective of actors i..n-1 given coverage m
  // before actor i; -inf when full coverage is unreachable.
  std::vector<std::vector<double>> best_suffix(n + 1, std::vector<double>(states, kNegInf));
  best_suffix[n][full] = 0.0;

  // interval_max[lo, hi] = max score over subsets w with lo ⊆ w ⊆ hi.
  std::vector<double> interval_max(pow3[static_cast<std::size_t>(k)]);
  for (std::size_t i = n; i-- > 0;) {
    const auto& table = tables[order[i]];
    for (std::uint64_t hi = 0; hi < states; ++hi) {
      std::uint64_t lo = hi;
      while (true) {
        const std::uint64_t idx = tern[hi] + tern[lo];
        if (lo == hi) {
          interval_max[idx] = hi == 0 ? kNegInf : table.score(hi);
        } else {
          const int b = std::countr_zero(hi & ~lo);
          const std::uint64_t step = pow3[static_cast<std::size_t>(b)];
          interval_max[idx] = std::max(interval_max[idx - step], interval_max[idx + step]);
        }
        if (lo == 0) break;
        lo = (lo - 1) & hi;
      }
    }

    const auto& next = best_suffix[i + 1];
    auto& current = best_suffix[i];
    for (std::uint64_t covered = 0; covered < states; ++covered) {
      const std::uint64_t open = full & ~covered;
      double best = kNegInf;
      std::uint64_t added = open;
      while (true) {
        const std::uint64_t target = covered | added;
        // Subsets w with covered ∪ w = target are exactly added ⊆ w ⊆ target.
        const double value = interval_max[tern[target] + tern[added]] + next[target];
        best = std::max(best, value);
        if (added == 0) break;
        added = (added - 1) & open;
      }
      current[covered] = best;
    }
  }

  const double objective = best_suffix[0][0];
  // Forward pass: pick the smallest subset that still allows a completion
  // reaching the optimum, tracking the exact suffix value still required.
  std::vector<std::uint64_t> choice(n, 0);
  std::uint64_t covered = 0;
  double required = objective;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& table = tables[order[i]];
    const auto& next = best_suffix[i + 1];
    bool found = false;
    for (std::uint64_t w = 1; w < states; ++w) {
      const double p = table.score(w);
      if (p + next[covered | w] >= required) {
        choice[i] = w;
        required = min_addend(p, required);
        covered |= w;
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error(ErrorCode::kInfeasible, "internal error: assignment reconstruction failed");
    }
  }
  return make_result(tables, order, choice, labels, objective);
}

AssignmentResult brute_force_assignment(std::span<const SubsetScoreTable> tables,
                                        const LabelSet& labels) {
  bool handled = false;
  auto early = trivial_result(tables, labels, handled);
  if (handled) return early;
  const int k = labels.size();
  const std::uint64_t subsets = (std::uint64_t{1} << k) - 1;
  if (std::pow(static_cast<double>(subsets), static_cast<double>(tables.size())) >
      kBruteForceLimit) {
    throw Error(ErrorCode::kSearchSpaceTooLarge,
                "brute force search space exceeds 1e7 assignments");
  }
  check_tables(tables, labels);

  const auto order = order_by_actor_id(tables);
  const std::size_t n = order.size();
  const std::uint64_t full = subsets;
  std::vector<std::uint64_t> choice(n, 1);
  std::vector<std::uint64_t> best_choice;
  double best = kNegInf;
  while (true) {
    std::uint64_t covered = 0;
    for (auto w : choice) covered |= w;
    if (covered == full) {
      double total = 0.0;
      for (std::size_t i = n; i-- > 0;) total = tables[order[i]].score(choice[i]) + total;
      if (best_choice.empty() || total > best) {
        best = total;
        best_choice = choice;
      }
    }
    std::size_t pos = n;
    while (pos > 0 && choice[pos - 1] == subsets) {
      choice[pos - 1] = 1;
      --pos;
    }
    if (pos == 0) break;
    ++choice[pos - 1];
  }
  return make_result(tables, order, best_choice, labels, best);
}

ActionSubset threshold_subset(const Eigen::Ref<const Eigen::VectorXd>& logits,
                              const LabelSet& labels) {
  ActionSubset::Bits bits = 0;
  for (int c : labels) {
    if (c >= logits.size()) {
      throw Error(ErrorCode::kInvalidInput,
                  "label " + std::to_string(c) + " beyond logits length");
    }
    if (logits(c) > 0.0) bits |= ActionSubset::Bits{1} << c;
  }
  return ActionSubset(bits);
}

std::vector<ActionSubset> assign_without_lp(std::span<const ActorDetection> actors,
                                            const LabelSet& labels) {
  std::vector<ActionSubset> out;
  out.reserve(actors.size());
  for (const auto& actor : actors) out.push_back(threshold_subset(actor.logits, labels));
  return out;
}

std::vector<ActionSubset> assign_without_lp(
    const Eigen::Ref<const Eigen::MatrixXd>& logits, const LabelSet& labels) {
  std::vector<ActionSubset> out;
  out.reserve(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    out.push_back(threshold_subset(logits.row(i).transpose(), labels));
  }
  return out;
}

bool satisfies_constraints(const AssignmentResult& result,
                           std::span<const SubsetScoreTable> tables,
                           const LabelSet& labels) {
  if (!result.feasible) return false;
  if (labels.empty()) return result.assignments.empty();
  if (result.assignments.size() != tables.size()) return false;
  const auto order = order_by_actor_id(tables);
  const ActionSubset all = labels.as_subset();
  ActionSubset covered;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& entry = result.assignments[i];
    if (entry.actor_id != tables[order[i]].actor_id) return false;
    if (entry.subset.empty() || !entry.subset.is_subset_of(all)) return false;
    covered = covered | entry.subset;
  }
  return covered == all;
}

}  // namespace actorsets
