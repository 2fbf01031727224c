#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace actorsets {

// Error categories. Each maps to a stable machine-readable name and to a
// process exit code in the CLI.
enum class ErrorCode {
  kInvalidInput,
  kParse,
  kPowerSetTooLarge,
  kSolverCapExceeded,
  kSearchSpaceTooLarge,
  kInfeasible,
  kEmptyGroundTruth,
  kDivergence,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

// Class indices are stored in 64-bit masks.
inline constexpr int kMaxClasses = 64;

struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  bool operator==(const BoundingBox&) const = default;
};

bool is_valid(const BoundingBox& box);

// A set of action classes, encoded as a bit mask over global class indices.
class ActionSubset {
public:
  using Bits = std::uint64_t;

  constexpr ActionSubset() = default;
  constexpr explicit ActionSubset(Bits bits) : bits_(bits) {}

  static ActionSubset from_classes(std::span<const int> classes);

  constexpr Bits bits() const { return bits_; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool contains(int c) const {
    return c >= 0 && c < kMaxClasses && ((bits_ >> c) & 1U) != 0;
  }
  constexpr bool is_subset_of(ActionSubset other) const {
    return (bits_ & ~other.bits_) == 0;
  }

  // Ascending class indices.
  std::vector<int> classes() const;

  friend constexpr ActionSubset operator|(ActionSubset a, ActionSubset b) {
    return ActionSubset(a.bits_ | b.bits_);
  }
  friend constexpr ActionSubset operator&(ActionSubset a, ActionSubset b) {
    return ActionSubset(a.bits_ & b.bits_);
  }
  constexpr auto operator<=>(const ActionSubset&) const = default;

private:
  Bits bits_ = 0;
};

// The clip-level weak label set L: sorted, duplicate-free class indices.
// Position j in the sorted order is the label's "local" index, used by the
// power-set enumeration and the solver's coverage masks.
class LabelSet {
public:
  LabelSet() = default;
  LabelSet(std::initializer_list<int> labels);
  explicit LabelSet(std::vector<int> labels);

  int size() const { return static_cast<int>(labels_.size()); }
  bool empty() const { return labels_.empty(); }
  int operator[](int local) const { return labels_[static_cast<std::size_t>(local)]; }
  auto begin() const { return labels_.begin(); }
  auto end() const { return labels_.end(); }
  const std::vector<int>& values() const { return labels_; }

  ActionSubset as_subset() const;
  bool contains(int c) const;

  // Local mask (bit j = labels[j]) to global subset and back.
  ActionSubset expand(std::uint64_t local_mask) const;
  std::uint64_t localize(ActionSubset subset) const;

  bool operator==(const LabelSet&) const = default;

private:
  std::vector<int> labels_;
};

struct ActorDetection {
  std::int64_t actor_id = 0;
  std::int64_t frame_id = 0;
  std::optional<BoundingBox> box;
  double confidence = 1.0;
  Eigen::VectorXd logits;
};

bool operator==(const ActorDetection& a, const ActorDetection& b);

struct ClipAnnotation {
  std::string clip_id;
  LabelSet labels;
  int class_count = 0;

  bool operator==(const ClipAnnotation&) const = default;
};

struct Frame {
  std::int64_t frame_id = 0;
  std::vector<ActorDetection> actors;

  bool operator==(const Frame&) const = default;
};

struct Clip {
  ClipAnnotation annotation;
  std::vector<Frame> frames;

  bool operator==(const Clip&) const = default;
};

struct AssignedSubset {
  std::int64_t actor_id = 0;
  ActionSubset subset;

  bool operator==(const AssignedSubset&) const = default;
};

struct AssignmentResult {
  std::vector<AssignedSubset> assignments;  // ascending actor_id
  double objective = 0.0;
  bool feasible = false;
};

struct PredictionRecord {
  std::int64_t frame_id = 0;
  BoundingBox box;
  int class_id = 0;
  double score = 0.0;
};

struct GroundTruthRecord {
  std::int64_t frame_id = 0;
  BoundingBox box;
  int class_id = 0;
};

// Throws Error(kInvalidInput) naming the offending actor and field.
void validate_actor(const ActorDetection& actor, int class_count);
void validate_annotation(const ClipAnnotation& annotation);
void validate_clip(std::span<const ActorDetection> actors,
                   const ClipAnnotation& annotation);
// Also rejects duplicate actor ids within a frame and actors whose frame_id
// disagrees with the enclosing frame.
void validate_clip(const Clip& clip);

}  // namespace actorsets
