#ifndef CITEKIT_SCHEDULE_BATCH_HPP
#define CITEKIT_SCHEDULE_BATCH_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "citekit/corpus/types.hpp"

namespace citekit::schedule {

// One task-homogeneous training batch. Padding is trailing; mask row r has
// lengths[r] ones followed by zeros.
struct Batch {
  Eigen::MatrixXi tokens;  // batch x width, pad index 0
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> mask;
  std::vector<int> labels;   // class indices within the task
  std::vector<int> lengths;  // true token count per row
  corpus::Task task = corpus::Task::Sentiment;
  std::vector<std::string> dataset_ids;

  Eigen::Index size() const { return tokens.rows(); }
};

}  // namespace citekit::schedule

#endif
