#pragma once

#include <string>
#include <string_view>

#include "actorsets/synthbench.hpp"

namespace actorsets {

inline constexpr std::string_view kSynthFormat = "actorsets-synth";
inline constexpr std::string_view kTraceFormat = "actorsets-trace";

// Run configuration: {"data": {...}, "schedule": {...}}. Every field is
// optional and overrides the defaults; unknown fields are rejected.
struct RunConfig {
  SyntheticConfig data;
  TrainSchedule schedule;
};

RunConfig parse_run_config(std::string_view text);
std::string serialize_run_config(const RunConfig& config);

std::string serialize_dataset(const SyntheticDataset& dataset);
SyntheticDataset parse_dataset(std::string_view text);

// Deterministic: no timestamps or host information.
std::string serialize_trace(const TrainResult& result, const TrainSchedule& schedule);

}  // namespace actorsets
