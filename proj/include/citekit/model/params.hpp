#ifndef CITEKIT_MODEL_PARAMS_HPP
#define CITEKIT_MODEL_PARAMS_HPP

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>

#include "citekit/model/config.hpp"

namespace citekit::model {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

// All trainable tensors, keyed by name so the optimizer, checkpointing and
// finite differencing can treat the model as a flat ordered collection.
// One encoder is shared by every registered task head.
struct ModelParams {
  EncoderConfig config;
  int vocab_size = 0;
  std::map<std::string, Matrix> tensors;
  std::map<std::string, int> heads;  // task tag -> class count

  const Matrix& at(const std::string& name) const;
  Matrix& at(const std::string& name);
  bool all_finite() const;
};

struct Gradients {
  std::map<std::string, Matrix> tensors;
  Matrix& at(const std::string& name);
  const Matrix& at(const std::string& name) const;
};

std::string head_weight_name(const std::string& task);
std::string head_bias_name(const std::string& task);

// Embedding + encoder tensors. Every tensor draws from its own name-derived
// seed so registering extra heads never shifts other initializations.
ModelParams init_params(const EncoderConfig& config, int vocab_size, std::uint64_t seed);

void register_head(ModelParams& params, const std::string& task, int n_classes,
                   std::uint64_t seed);

// Zero-filled gradient tensors mirroring params.
Gradients zero_gradients(const ModelParams& params);

}  // namespace citekit::model

#endif
