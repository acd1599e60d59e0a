#ifndef CITEKIT_MODEL_OPTIMIZER_HPP
#define CITEKIT_MODEL_OPTIMIZER_HPP

#include <cstdint>
#include <map>
#include <string>

#include "citekit/model/params.hpp"

namespace citekit::model {

struct OptHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment state; accumulator shapes mirror the parameter tensors.
struct OptState {
  OptHyper hyper;
  std::int64_t step = 0;
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;
};

OptState make_opt_state(const ModelParams& params, const OptHyper& hyper = {});

// One bias-corrected adaptive-moment update; increments the step counter.
void opt_step(ModelParams& params, const Gradients& grads, OptState& state);

}  // namespace citekit::model

#endif
