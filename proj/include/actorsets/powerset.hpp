#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "actorsets/core.hpp"

namespace actorsets {

inline constexpr int kDefaultPowerSetCap = 20;

// All 2^|L| subsets of `labels`, including the empty set, ordered by
// ascending local bit value. Throws kPowerSetTooLarge when |L| > cap.
std::vector<ActionSubset> enumerate_power_set(const LabelSet& labels,
                                              int cap = kDefaultPowerSetCap);

// Sum of the logits of the classes in `subset`, accumulated in ascending
// class order. Zero for the empty subset.
template <typename Derived>
typename Derived::Scalar subset_log_numerator(
    ActionSubset subset, const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Scalar sum(0);
  for (int c : subset.classes()) {
    if (c >= logits.size()) {
      throw Error(ErrorCode::kInvalidInput,
                  "subset class " + std::to_string(c) + " beyond logits length");
    }
    const Scalar s = logits(c);
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidInput, "non-finite logit for class " +
                                                std::to_string(c));
    }
    sum += s;
  }
  return sum;
}

// log(exp(a) + exp(b)) without overflow.
template <typename Scalar>
Scalar log_add_exp(Scalar a, Scalar b) {
  using std::exp;
  using std::log1p;
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<Scalar>::infinity()) return a;
  return a + log1p(exp(b - a));
}

template <typename Scalar>
Scalar softplus(Scalar s) {
  using std::exp;
  using std::log1p;
  return s > Scalar(0) ? s + log1p(exp(-s)) : log1p(exp(s));
}

// log of the sum over all non-empty subsets w of L of exp(sum_{c in w} s_c),
// given the logits restricted to L. Uses
//   prod_c (1 + e^{s_c}) - 1
// accumulated one label at a time in log space:
//   N_1 = s_1,  N_k = logaddexp(N_{k-1} + softplus(s_k), s_k).
// O(|L|); stable for arbitrarily large or small logits.
template <typename Derived>
typename Derived::Scalar log_normalizer(
    const Eigen::MatrixBase<Derived>& restricted_logits) {
  using Scalar = typename Derived::Scalar;
  if (restricted_logits.size() == 0) {
    throw Error(ErrorCode::kInvalidInput,
                "log normalizer requires a non-empty label set");
  }
  if (!restricted_logits.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "non-finite logits");
  }
  Scalar acc = restricted_logits(0);
  for (Eigen::Index k = 1; k < restricted_logits.size(); ++k) {
    const Scalar s = restricted_logits(k);
    acc = log_add_exp(acc + softplus(s), s);
  }
  return acc;
}

// Subset probabilities of one actor over the non-empty subsets of L, scaled by
// the detection confidence. Entry k describes the subset with local mask k+1.
struct SubsetScoreTable {
  std::int64_t actor_id = 0;
  double confidence = 1.0;
  LabelSet labels;
  std::vector<ActionSubset> subsets;
  Eigen::VectorXd scores;
  Eigen::VectorXd log_scores;  // -inf where the confidence is zero

  Eigen::Index size() const { return scores.size(); }
  double score(std::uint64_t local_mask) const {
    return scores(static_cast<Eigen::Index>(local_mask - 1));
  }
};

SubsetScoreTable score_subsets(const Eigen::Ref<const Eigen::VectorXd>& logits,
                               double confidence, const LabelSet& labels,
                               int cap = kDefaultPowerSetCap);

SubsetScoreTable score_actor_subsets(const ActorDetection& actor,
                                     const LabelSet& labels,
                                     int cap = kDefaultPowerSetCap);

}  // namespace actorsets
