#ifndef CITEKIT_SCHEDULE_SMOTE_HPP
#define CITEKIT_SCHEDULE_SMOTE_HPP

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

namespace citekit::schedule {

struct SmoteSpec {
  std::size_t k_neighbors = 5;
  std::size_t n_synthetic = 0;
  std::array<double, 2> lambda_range{0.0, 1.0};
  std::uint64_t seed = 0;
};

struct SmoteResult {
  Eigen::MatrixXd features;  // input rows followed by synthetics
  std::vector<int> labels;
  int minority_label = -1;
};

// Minority-class oversampling in a fixed-dimension feature space: each
// synthetic is x_i + lambda * (x_j - x_i) with x_j one of x_i's k nearest
// same-class neighbors and lambda uniform in lambda_range.
SmoteResult smote_augment(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                          const SmoteSpec& spec);

}  // namespace citekit::schedule

#endif
