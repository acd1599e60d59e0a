#include "citekit/model/optimizer.hpp"

#include <cmath>

#include "citekit/util/error.hpp"

namespace citekit::model {

OptState make_opt_state(const ModelParams& params, const OptHyper& hyper) {
  OptState s;
  s.hyper = hyper;
  for (const auto& [name, t] : params.tensors) {
    s.m[name] = Matrix::Zero(t.rows(), t.cols());
    s.v[name] = Matrix::Zero(t.rows(), t.cols());
  }
  return s;
}

void opt_step(ModelParams& params, const Gradients& grads, OptState& state) {
  state.step += 1;
  const double b1 = state.hyper.beta1, b2 = state.hyper.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (auto& [name, param] : params.tensors) {
    auto git = grads.tensors.find(name);
    if (git == grads.tensors.end())
      throw RuntimeFailure("opt_step: missing gradient for tensor '" + name + "'");
    const Matrix& g = git->second;
    if (g.rows() != param.rows() || g.cols() != param.cols())
      throw ValidationError("opt_step: shape mismatch for tensor '" + name + "'");
    Matrix& m = state.m.at(name);
    Matrix& v = state.v.at(name);
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v.array().matrix() + (1.0 - b2) * g.cwiseProduct(g);
    Matrix m_hat = m / bc1;
    Matrix v_hat = v / bc2;
    param.array() -=
        state.hyper.learning_rate * m_hat.array() / (v_hat.array().sqrt() + state.hyper.epsilon);
  }
}

}  // namespace citekit::model
