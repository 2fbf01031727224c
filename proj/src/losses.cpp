#include "actorsets/losses.hpp"

namespace actorsets {

Eigen::VectorXd subset_targets(ActionSubset subset, int class_count) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(class_count);
  for (int c : subset.classes()) {
    if (c >= class_count) {
      throw Error(ErrorCode::kInvalidInput,
                  "class " + std::to_string(c) + " outside [0, " +
                      std::to_string(class_count) + ")");
    }
    y(c) = 1.0;
  }
  return y;
}

}  // namespace actorsets
