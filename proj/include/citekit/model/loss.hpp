#ifndef CITEKIT_MODEL_LOSS_HPP
#define CITEKIT_MODEL_LOSS_HPP

#include <vector>

#include "citekit/model/config.hpp"
#include "citekit/model/params.hpp"

namespace citekit::model {

// Row-wise stable softmax (log-sum-exp).
Matrix softmax(const Matrix& logits);

struct LossResult {
  double value = 0.0;
  Matrix dlogits;  // gradient of the batch-mean loss
};

// Batch-mean loss over rows of `logits`.
//   CE        -mean log softmax(z)[y]
//   Weighted  per-sample term scaled by w[y]
//   Focal     -mean (1 - p_t)^gamma log p_t, p_t clamped at 1e-12
LossResult loss(const Matrix& logits, const std::vector<int>& labels, const LossSpec& spec);

// Inverse-frequency weights: w_c = N / (K * N_c).
std::vector<double> class_weights(const std::vector<std::size_t>& class_counts);

}  // namespace citekit::model

#endif
