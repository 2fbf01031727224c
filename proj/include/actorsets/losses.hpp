#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "actorsets/core.hpp"

namespace actorsets {

inline constexpr double kProbabilityEpsilon = 1e-7;
inline constexpr double kDefaultAlpha = 0.3;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Derived>
Matrix<typename Derived::Scalar> sigmoid(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  return logits.unaryExpr([](Scalar s) { return Scalar(1) / (Scalar(1) + std::exp(-s)); });
}

// Elementwise sigmoid clamped to [eps, 1 - eps] so that cross entropy stays
// finite.
template <typename Derived>
Matrix<typename Derived::Scalar> sigmoid_probs(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar eps(kProbabilityEpsilon);
  return sigmoid(logits).cwiseMax(eps).cwiseMin(Scalar(1) - eps);
}

template <typename Scalar>
Scalar binary_cross_entropy(Scalar target, Scalar prob) {
  return -target * std::log(prob) - (Scalar(1) - target) * std::log(Scalar(1) - prob);
}

// Multi-hot vector of length `class_count` with ones at the members of
// `subset`.
Eigen::VectorXd subset_targets(ActionSubset subset, int class_count);

// Rows of `probs` are actors, columns classes. Bag-level cross entropy of the
// per-class maximum over actors, averaged over classes.
template <typename DerivedY, typename DerivedP>
typename DerivedP::Scalar miml_loss(const Eigen::MatrixBase<DerivedY>& targets,
                                    const Eigen::MatrixBase<DerivedP>& probs) {
  using Scalar = typename DerivedP::Scalar;
  if (probs.rows() == 0) {
    throw Error(ErrorCode::kInvalidInput, "MIML loss needs at least one actor");
  }
  if (targets.size() != probs.cols()) {
    throw Error(ErrorCode::kInvalidInput, "MIML targets length != class count");
  }
  const Eigen::Index classes = probs.cols();
  Scalar sum(0);
  for (Eigen::Index c = 0; c < classes; ++c) {
    sum += binary_cross_entropy<Scalar>(targets(c), probs.col(c).maxCoeff());
  }
  return sum / Scalar(classes);
}

// Sum over actors of the class-averaged cross entropy against the assigned
// subset's multi-hot target.
template <typename DerivedP>
typename DerivedP::Scalar association_loss(std::span<const ActionSubset> assignments,
                                           const Eigen::MatrixBase<DerivedP>& probs) {
  using Scalar = typename DerivedP::Scalar;
  if (static_cast<Eigen::Index>(assignments.size()) != probs.rows()) {
    throw Error(ErrorCode::kInvalidInput,
                "association loss needs exactly one subset per actor");
  }
  const Eigen::Index classes = probs.cols();
  const ActionSubset::Bits allowed =
      classes >= kMaxClasses ? ~ActionSubset::Bits{0}
                             : (ActionSubset::Bits{1} << classes) - 1;
  Scalar total(0);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const ActionSubset subset = assignments[static_cast<std::size_t>(i)];
    if ((subset.bits() & ~allowed) != 0) {
      throw Error(ErrorCode::kInvalidInput,
                  "assigned subset references a class outside [0, C)");
    }
    Scalar actor(0);
    for (Eigen::Index c = 0; c < classes; ++c) {
      const Scalar y = subset.contains(static_cast<int>(c)) ? Scalar(1) : Scalar(0);
      actor += binary_cross_entropy<Scalar>(y, probs(i, c));
    }
    total += actor / Scalar(classes);
  }
  return total;
}

template <typename Scalar>
struct LossBreakdown {
  Scalar miml = 0;
  Scalar association = 0;
  Scalar combined = 0;
  Scalar alpha = Scalar(kDefaultAlpha);
  Matrix<Scalar> gradient;  // d combined / d logits, actors x classes
};

// Gradient of the combined loss with respect to the logits. Cross entropy on
// a sigmoid contributes (sigmoid(s) - y) / C per term; the bag maximum routes
// the MIML term to the highest-logit actor of each class (lowest index on
// ties). An empty `assignments` span drops the association term.
template <typename DerivedY, typename DerivedS>
Matrix<typename DerivedS::Scalar> loss_gradients(const Eigen::MatrixBase<DerivedY>& targets,
                                                 const Eigen::MatrixBase<DerivedS>& logits,
                                                 std::span<const ActionSubset> assignments,
                                                 typename DerivedS::Scalar alpha) {
  using Scalar = typename DerivedS::Scalar;
  const Eigen::Index actors = logits.rows();
  const Eigen::Index classes = logits.cols();
  const Matrix<Scalar> sig = sigmoid(logits);
  Matrix<Scalar> grad = Matrix<Scalar>::Zero(actors, classes);
  const Scalar inv_c = Scalar(1) / Scalar(classes);
  for (Eigen::Index c = 0; c < classes; ++c) {
    Eigen::Index top = 0;
    for (Eigen::Index i = 1; i < actors; ++i) {
      if (logits(i, c) > logits(top, c)) top = i;
    }
    grad(top, c) += (sig(top, c) - targets(c)) * inv_c;
  }
  if (!assignments.empty()) {
    for (Eigen::Index i = 0; i < actors; ++i) {
      const ActionSubset subset = assignments[static_cast<std::size_t>(i)];
      for (Eigen::Index c = 0; c < classes; ++c) {
        const Scalar y = subset.contains(static_cast<int>(c)) ? Scalar(1) : Scalar(0);
        grad(i, c) += alpha * (sig(i, c) - y) * inv_c;
      }
    }
  }
  return grad;
}

// combined = miml + alpha * association, with its logit gradient.
template <typename DerivedY, typename DerivedS>
LossBreakdown<typename DerivedS::Scalar> combined_loss(
    const Eigen::MatrixBase<DerivedY>& targets, const Eigen::MatrixBase<DerivedS>& logits,
    std::span<const ActionSubset> assignments,
    typename DerivedS::Scalar alpha = typename DerivedS::Scalar(kDefaultAlpha)) {
  using Scalar = typename DerivedS::Scalar;
  const Matrix<Scalar> probs = sigmoid_probs(logits);
  LossBreakdown<Scalar> out;
  out.alpha = alpha;
  out.miml = miml_loss(targets, probs);
  out.association = assignments.empty() ? Scalar(0) : association_loss(assignments, probs);
  out.combined = out.miml + alpha * out.association;
  out.gradient = loss_gradients(targets, logits, assignments, alpha);
  return out;
}

}  // namespace actorsets
