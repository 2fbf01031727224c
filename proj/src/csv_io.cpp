#include "actorsets/csv_io.hpp"

#include <charconv>
#include <cmath>

namespace actorsets {

std::int64_t FrameInterner::intern(const std::string& video_id, const std::string& timestamp) {
  const auto next = static_cast<std::int64_t>(ids_.size());
  return ids_.try_emplace({video_id, timestamp}, next).first->second;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  int line_no = 0;
  while (!text.empty()) {
    const auto end = text.find('\n');
    const auto line = trim(text.substr(0, end));
    ++line_no;
    if (!line.empty() && line.front() != '#') fn(line, line_no);
    if (end == std::string_view::npos) break;
    text.remove_prefix(end + 1);
  }
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

[[noreturn]] void fail(int line_no, const std::string& what) {
  throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + what);
}

double to_double(std::string_view s, int line_no, const char* column) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    fail(line_no, std::string("column '") + column + "': not a finite number '" + std::string(s) + "'");
  }
  return value;
}

int to_class(std::string_view s, int line_no) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || value < 0) {
    fail(line_no, "column 'class_id': not a non-negative integer '" + std::string(s) + "'");
  }
  return value;
}

struct Row {
  std::int64_t frame_id;
  BoundingBox box;
  int class_id;
  std::vector<std::string_view> fields;
};

Row parse_row(std::string_view line, int line_no, FrameInterner& frames, std::size_t min_cols,
              std::size_t max_cols) {
  Row row;
  row.fields = split(line);
  const auto& f = row.fields;
  if (f.size() < min_cols || f.size() > max_cols) {
    fail(line_no, "expected " + std::to_string(min_cols) +
                      (min_cols == max_cols ? "" : " or " + std::to_string(max_cols)) +
                      " columns, got " + std::to_string(f.size()));
  }
  if (f[0].empty()) fail(line_no, "column 'video_id' is empty");
  row.frame_id = frames.intern(std::string(f[0]), std::string(f[1]));
  static constexpr const char* kNames[] = {"x1", "y1", "x2", "y2"};
  double c[4];
  for (int k = 0; k < 4; ++k) {
    c[k] = to_double(f[2 + static_cast<std::size_t>(k)], line_no, kNames[k]);
    if (c[k] < 0.0 || c[k] > 1.0) {
      fail(line_no, std::string("column '") + kNames[k] + "': coordinate outside [0, 1]");
    }
  }
  row.box = BoundingBox{c[0], c[1], c[2], c[3]};
  if (!is_valid(row.box)) fail(line_no, "box has non-positive width or height");
  row.class_id = to_class(f[6], line_no);
  return row;
}

}  // namespace

std::vector<GroundTruthRecord> parse_ground_truth_csv(std::string_view text,
                                                      FrameInterner& frames) {
  std::vector<GroundTruthRecord> out;
  for_each_line(text, [&](std::string_view line, int line_no) {
    const auto row = parse_row(line, line_no, frames, 7, 8);
    out.push_back({row.frame_id, row.box, row.class_id});
  });
  return out;
}

std::vector<PredictionRecord> parse_prediction_csv(std::string_view text,
                                                   FrameInterner& frames) {
  std::vector<PredictionRecord> out;
  for_each_line(text, [&](std::string_view line, int line_no) {
    const auto row = parse_row(line, line_no, frames, 8, 8);
    out.push_back({row.frame_id, row.box, row.class_id, to_double(row.fields[7], line_no, "score")});
  });
  return out;
}

std::vector<std::string> parse_class_list(std::string_view text) {
  std::vector<std::string> out;
  for_each_line(text, [&](std::string_view line, int) { out.emplace_back(line); });
  return out;
}

}  // namespace actorsets
