#include "citekit/model/loss.hpp"

#include <cmath>

#include "citekit/util/error.hpp"

namespace citekit::model {

namespace {
constexpr double kProbFloor = 1e-12;
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(r).array() - m).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

LossResult loss(const Matrix& logits, const std::vector<int>& labels, const LossSpec& spec) {
  const Eigen::Index b = logits.rows();
  const Eigen::Index k = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != b)
    throw ValidationError("loss: label count does not match logit rows");
  for (int y : labels)
    if (y < 0 || y >= k) throw ValidationError("loss: label out of range");
  spec.validate(static_cast<int>(k));
  if (b == 0) throw ValidationError("loss: empty batch");

  LossResult res;
  res.dlogits = Matrix::Zero(b, k);
  double total = 0.0;
  const double inv_b = 1.0 / static_cast<double>(b);

  for (Eigen::Index r = 0; r < b; ++r) {
    const int y = labels[r];
    const double m = logits.row(r).maxCoeff();
    Eigen::RowVectorXd shifted = logits.row(r).array() - m;
    Eigen::RowVectorXd e = shifted.array().exp();
    const double z = e.sum();
    Eigen::RowVectorXd p = e / z;
    const double logp_y = shifted(y) - std::log(z);
    const double p_y = p(y);

    switch (spec.kind) {
      case LossKind::CrossEntropy: {
        total += -logp_y;
        res.dlogits.row(r) = p * inv_b;
        res.dlogits(r, y) -= inv_b;
        break;
      }
      case LossKind::WeightedCrossEntropy: {
        const double w = spec.class_weights[y];
        total += -w * logp_y;
        res.dlogits.row(r) = w * inv_b * p;
        res.dlogits(r, y) -= w * inv_b;
        break;
      }
      case LossKind::Focal: {
        const double g = spec.gamma;
        const double one_minus = 1.0 - p_y;
        double dl_dpt;  // d loss_r / d p_t
        if (p_y > kProbFloor) {
          total += -std::pow(one_minus, g) * logp_y;
          // d/dt [-(1-t)^g log t] = g (1-t)^(g-1) log t - (1-t)^g / t
          const double pw = g == 0.0 ? 0.0 : g * std::pow(one_minus, g - 1.0) * logp_y;
          dl_dpt = pw - std::pow(one_minus, g) / p_y;
        } else {
          const double log_floor = std::log(kProbFloor);
          total += -std::pow(one_minus, g) * log_floor;
          dl_dpt = g == 0.0 ? 0.0 : g * std::pow(one_minus, g - 1.0) * log_floor;
        }
        // dp_t/dz_j = p_t (delta_jy - p_j)
        Eigen::RowVectorXd dpt_dz = -p_y * p;
        dpt_dz(y) += p_y;
        res.dlogits.row(r) = dl_dpt * inv_b * dpt_dz;
        break;
      }
    }
  }
  res.value = total * inv_b;
  return res;
}

std::vector<double> class_weights(const std::vector<std::size_t>& class_counts) {
  if (class_counts.empty()) throw ValidationError("class_weights: no classes");
  std::size_t total = 0;
  for (std::size_t c : class_counts) {
    if (c == 0) throw ValidationError("class_weights: zero-count class");
    total += c;
  }
  const double n = static_cast<double>(total);
  const double k = static_cast<double>(class_counts.size());
  std::vector<double> w;
  w.reserve(class_counts.size());
  for (std::size_t c : class_counts) w.push_back(n / (k * static_cast<double>(c)));
  return w;
}

}  // namespace citekit::model
