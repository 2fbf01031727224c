#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "actorsets/core.hpp"

namespace actorsets {

// Maps (video_id, timestamp) keys onto dense frame ids in order of first
// appearance. Share one interner between ground truth and predictions.
class FrameInterner {
public:
  std::int64_t intern(const std::string& video_id, const std::string& timestamp);
  std::size_t size() const { return ids_.size(); }

private:
  std::map<std::pair<std::string, std::string>, std::int64_t> ids_;
};

// Rows: video_id,timestamp,x1,y1,x2,y2,class_id[,score]. Coordinates are
// normalized to [0, 1] and class ids are 0-based. Blank lines and lines
// starting with '#' are skipped. Ground truth takes 7 columns; an 8th column
// is ignored. Predictions require the score column.
std::vector<GroundTruthRecord> parse_ground_truth_csv(std::string_view text,
                                                      FrameInterner& frames);
std::vector<PredictionRecord> parse_prediction_csv(std::string_view text,
                                                   FrameInterner& frames);

// One class name per line; blank lines and '#' comments are skipped.
std::vector<std::string> parse_class_list(std::string_view text);

}  // namespace actorsets
