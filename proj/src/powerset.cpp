#include "actorsets/powerset.hpp"

#include <bit>

namespace actorsets {

namespace {

void check_cap(const LabelSet& labels, int cap) {
  if (labels.size() > cap) {
    throw Error(ErrorCode::kPowerSetTooLarge,
                "power set too large: |L| = " + std::to_string(labels.size()) +
                    " exceeds cap " + std::to_string(cap));
  }
}

}  // namespace

std::vector<ActionSubset> enumerate_power_set(const LabelSet& labels, int cap) {
  check_cap(labels, cap);
  const std::uint64_t count = std::uint64_t{1} << labels.size();
  std::vector<ActionSubset> out;
  out.reserve(count);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    out.push_back(labels.expand(mask));
  }
  return out;
}

SubsetScoreTable score_subsets(const Eigen::Ref<const Eigen::VectorXd>& logits,
                               double confidence, const LabelSet& labels,
                               int cap) {
  check_cap(labels, cap);
  if (labels.empty()) {
    throw Error(ErrorCode::kInvalidInput,
                "cannot score subsets of an empty label set");
  }
  const int k = labels.size();
  Eigen::VectorXd local(k);
  for (int j = 0; j < k; ++j) {
    if (labels[j] >= logits.size()) {
      throw Error(ErrorCode::kInvalidInput,
                  "label " + std::to_string(labels[j]) + " beyond logits length");
    }
    local(j) = logits(labels[j]);
  }
  const double log_z = log_normalizer(local);
  const double log_d = std::log(confidence);

  const std::uint64_t count = std::uint64_t{1} << k;
  // numerator[mask] adds the highest bit last, so the sum runs in ascending
  // class order, same as subset_log_numerator.
  std::vector<double> numerator(count, 0.0);
  SubsetScoreTable table;
  table.confidence = confidence;
  table.labels = labels;
  table.subsets.reserve(count - 1);
  table.scores.resize(static_cast<Eigen::Index>(count - 1));
  table.log_scores.resize(static_cast<Eigen::Index>(count - 1));
  for (std::uint64_t mask = 1; mask < count; ++mask) {
    const int high = std::bit_width(mask) - 1;
    numerator[mask] = numerator[mask ^ (std::uint64_t{1} << high)] + local(high);
    const double log_p = numerator[mask] - log_z;
    const auto row = static_cast<Eigen::Index>(mask - 1);
    table.subsets.push_back(labels.expand(mask));
    table.scores(row) = std::exp(log_p) * confidence;
    table.log_scores(row) = log_p + log_d;
  }
  return table;
}

SubsetScoreTable score_actor_subsets(const ActorDetection& actor,
                                     const LabelSet& labels, int cap) {
  auto table = score_subsets(actor.logits, actor.confidence, labels, cap);
  table.actor_id = actor.actor_id;
  return table;
}

}  // namespace actorsets
