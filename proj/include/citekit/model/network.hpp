#ifndef CITEKIT_MODEL_NETWORK_HPP
#define CITEKIT_MODEL_NETWORK_HPP

#include <string>
#include <vector>

#include "citekit/model/loss.hpp"
#include "citekit/model/params.hpp"
#include "citekit/schedule/batch.hpp"

namespace citekit::model {

// embedding -> encoder -> masked pooling -> task head.
// Pooling per variant: masked mean (MeanPool, MiniAttention), max-over-time
// per filter (CNN), final hidden state (RNN/LSTM, directions concatenated).
// Rows whose sequence is empty map to the zero pooled vector.
Matrix forward(const ModelParams& params, const schedule::Batch& batch, const std::string& task);

std::vector<int> predict(const ModelParams& params, const schedule::Batch& batch,
                         const std::string& task);

double loss_value(const ModelParams& params, const schedule::Batch& batch,
                  const std::string& task, const LossSpec& spec);

struct BackwardResult {
  double loss_value = 0.0;
  Gradients grads;  // every tensor present; inactive heads get exact zeros
};

BackwardResult backward(const ModelParams& params, const schedule::Batch& batch,
                        const std::string& task, const LossSpec& spec);

// Mean of embedding rows over true tokens (zero row for empty sequences).
// The frozen feature space the SMOTE path augments.
Matrix embed_mean_pool(const ModelParams& params, const schedule::Batch& batch);

}  // namespace citekit::model

#endif
