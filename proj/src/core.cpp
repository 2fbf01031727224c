#include "actorsets/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace actorsets {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid_input";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kPowerSetTooLarge: return "powerset_too_large";
    case ErrorCode::kSolverCapExceeded: return "solver_cap_exceeded";
    case ErrorCode::kSearchSpaceTooLarge: return "search_space_too_large";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kEmptyGroundTruth: return "empty_ground_truth";
    case ErrorCode::kDivergence: return "divergence";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

bool is_valid(const BoundingBox& box) {
  return std::isfinite(box.x1) && std::isfinite(box.y1) &&
         std::isfinite(box.x2) && std::isfinite(box.y2) && box.x2 > box.x1 &&
         box.y2 > box.y1;
}

ActionSubset ActionSubset::from_classes(std::span<const int> classes) {
  Bits bits = 0;
  for (int c : classes) {
    if (c < 0 || c >= kMaxClasses) {
      throw Error(ErrorCode::kInvalidInput,
                  "class index " + std::to_string(c) + " outside [0, 64)");
    }
    bits |= Bits{1} << c;
  }
  return ActionSubset(bits);
}

std::vector<int> ActionSubset::classes() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (Bits rest = bits_; rest != 0; rest &= rest - 1) {
    out.push_back(std::countr_zero(rest));
  }
  return out;
}

LabelSet::LabelSet(std::initializer_list<int> labels)
    : LabelSet(std::vector<int>(labels)) {}

LabelSet::LabelSet(std::vector<int> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  if (!labels_.empty() && (labels_.front() < 0 || labels_.back() >= kMaxClasses)) {
    throw Error(ErrorCode::kInvalidInput,
                "label index out of range: labels must lie in [0, 64)");
  }
}

ActionSubset LabelSet::as_subset() const {
  return ActionSubset::from_classes(labels_);
}

bool LabelSet::contains(int c) const {
  return std::binary_search(labels_.begin(), labels_.end(), c);
}

ActionSubset LabelSet::expand(std::uint64_t local_mask) const {
  ActionSubset::Bits bits = 0;
  for (std::uint64_t rest = local_mask; rest != 0; rest &= rest - 1) {
    const int j = std::countr_zero(rest);
    bits |= ActionSubset::Bits{1} << labels_[static_cast<std::size_t>(j)];
  }
  return ActionSubset(bits);
}

std::uint64_t LabelSet::localize(ActionSubset subset) const {
  std::uint64_t local = 0;
  for (std::size_t j = 0; j < labels_.size(); ++j) {
    if (subset.contains(labels_[j])) local |= std::uint64_t{1} << j;
  }
  return local;
}

bool operator==(const ActorDetection& a, const ActorDetection& b) {
  return a.actor_id == b.actor_id && a.frame_id == b.frame_id &&
         a.box == b.box && a.confidence == b.confidence &&
         a.logits.size() == b.logits.size() &&
         (a.logits.array() == b.logits.array()).all();
}

namespace {

[[noreturn]] void fail_field(std::int64_t actor_id, std::string_view field,
                             const std::string& what) {
  std::ostringstream msg;
  msg << "actor " << actor_id << ": field '" << field << "': " << what;
  throw Error(ErrorCode::kInvalidInput, msg.str());
}

}  // namespace

void validate_actor(const ActorDetection& actor, int class_count) {
  if (!std::isfinite(actor.confidence)) {
    fail_field(actor.actor_id, "confidence", "non-finite value");
  }
  if (actor.confidence < 0.0 || actor.confidence > 1.0) {
    fail_field(actor.actor_id, "confidence",
               "confidence out of range (" + std::to_string(actor.confidence) + ")");
  }
  if (actor.logits.size() != class_count) {
    fail_field(actor.actor_id, "logits",
               "logits length " + std::to_string(actor.logits.size()) +
                   " != class count " + std::to_string(class_count));
  }
  if (!actor.logits.allFinite()) {
    fail_field(actor.actor_id, "logits", "non-finite value");
  }
  if (actor.box && !is_valid(*actor.box)) {
    fail_field(actor.actor_id, "box",
               "box must be finite with x2 > x1 and y2 > y1");
  }
}

void validate_annotation(const ClipAnnotation& annotation) {
  if (annotation.class_count <= 0 || annotation.class_count > kMaxClasses) {
    throw Error(ErrorCode::kInvalidInput,
                "clip '" + annotation.clip_id + "': class count " +
                    std::to_string(annotation.class_count) + " outside [1, 64]");
  }
  for (int c : annotation.labels) {
    if (c < 0 || c >= annotation.class_count) {
      throw Error(ErrorCode::kInvalidInput,
                  "clip '" + annotation.clip_id + "': label index out of range (" +
                      std::to_string(c) + " with C = " +
                      std::to_string(annotation.class_count) + ")");
    }
  }
}

void validate_clip(std::span<const ActorDetection> actors,
                   const ClipAnnotation& annotation) {
  validate_annotation(annotation);
  for (const auto& actor : actors) validate_actor(actor, annotation.class_count);
}

void validate_clip(const Clip& clip) {
  validate_annotation(clip.annotation);
  for (const auto& frame : clip.frames) {
    std::set<std::int64_t> seen;
    for (const auto& actor : frame.actors) {
      validate_actor(actor, clip.annotation.class_count);
      if (actor.frame_id != frame.frame_id) {
        fail_field(actor.actor_id, "frame_id",
                   "actor frame " + std::to_string(actor.frame_id) +
                       " != enclosing frame " + std::to_string(frame.frame_id));
      }
      if (!seen.insert(actor.actor_id).second) {
        fail_field(actor.actor_id, "actor_id",
                   "duplicate actor_id in frame " + std::to_string(frame.frame_id));
      }
    }
  }
}

}  // namespace actorsets
