#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "actorsets/core.hpp"

namespace actorsets {

inline constexpr std::string_view kClipFormat = "actorsets-clips";
inline constexpr int kClipFormatVersion = 1;

// Versioned clip document. Canonical field order:
//   format, version, units, class_count, classes, clips[] {
//     clip_id, labels, frames[] { frame_id, actors[] {
//       actor_id, box?, confidence, logits } } }
struct ClipFile {
  std::string units = "normalized";  // "normalized" or "pixel"
  std::vector<std::string> class_names;
  std::vector<Clip> clips;

  int class_count() const { return static_cast<int>(class_names.size()); }
  bool operator==(const ClipFile&) const = default;
};

struct ParseOptions {
  // Reject unknown fields; otherwise they are reported through `warnings`.
  bool strict = true;
  std::vector<std::string>* warnings = nullptr;
};

// Errors carry the JSON path of the offending field (e.g.
// "clips[0].frames[2].actors[1].logits") or the parser's line and column.
ClipFile parse_clip_file(std::string_view text, const ParseOptions& options = {});
std::string serialize_clip_file(const ClipFile& file);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace actorsets
