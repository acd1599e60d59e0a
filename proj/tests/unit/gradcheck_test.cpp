#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "citekit/model/network.hpp"
#include "citekit/train/trainer.hpp"
#include "citekit/util/rng.hpp"

using namespace citekit;
using model::EncoderConfig;
using model::EncoderKind;
using model::LossKind;
using model::LossSpec;

namespace {

constexpr double kStep = 1e-4;

schedule::Batch tiny_batch(int vocab_size, std::uint64_t seed) {
  // 2 samples, lengths 5 and 8, explicit trailing padding on the first row
  util::Rng rng(seed);
  schedule::Batch b;
  b.tokens = Eigen::MatrixXi::Constant(2, 8, model::Vocab::kPad);
  b.mask.setZero(2, 8);
  b.lengths = {5, 8};
  b.labels = {0, 2};
  b.task = corpus::Task::Sentiment;
  b.dataset_ids = {"toy", "toy"};
  for (int r = 0; r < 2; ++r)
    for (int j = 0; j < b.lengths[static_cast<std::size_t>(r)]; ++j) {
      b.tokens(r, j) = static_cast<int>(rng.uniform_int(2, vocab_size - 1));
      b.mask(r, j) = 1;
    }
  return b;
}

// max relative error between analytic gradients and central differences,
// rel = |a - f| / max(|a|, |f|); differences under 1e-7 count as exact
double max_gradcheck_error(const EncoderConfig& cfg, const LossSpec& spec) {
  const int vocab_size = 12;
  auto params = train::make_model(cfg, vocab_size, {{"sentiment", 3}}, 901);
  auto batch = tiny_batch(vocab_size, 77);

  auto analytic = model::backward(params, batch, "sentiment", spec).grads;

  double worst = 0.0;
  for (auto& [name, tensor] : params.tensors) {
    const auto& a = analytic.at(name);
    for (Eigen::Index r = 0; r < tensor.rows(); ++r) {
      for (Eigen::Index c = 0; c < tensor.cols(); ++c) {
        const double saved = tensor(r, c);
        tensor(r, c) = saved + kStep;
        const double up = model::loss_value(params, batch, "sentiment", spec);
        tensor(r, c) = saved - kStep;
        const double down = model::loss_value(params, batch, "sentiment", spec);
        tensor(r, c) = saved;
        const double fd = (up - down) / (2.0 * kStep);
        const double diff = std::abs(a(r, c) - fd);
        if (diff <= 1e-7) continue;
        worst = std::max(worst, diff / std::max(std::abs(a(r, c)), std::abs(fd)));
      }
    }
  }
  return worst;
}

std::vector<std::pair<std::string, EncoderConfig>> gradcheck_configs() {
  std::vector<std::pair<std::string, EncoderConfig>> out;
  {
    EncoderConfig c;
    c.kind = EncoderKind::MeanPool;
    c.embed_dim = 6;
    c.max_len = 8;
    out.emplace_back("meanpool", c);
  }
  {
    EncoderConfig c;
    c.kind = EncoderKind::Cnn;
    c.embed_dim = 5;
    c.max_len = 8;
    c.cnn_layers = 2;
    c.cnn_filters = 3;
    c.cnn_widths = {2, 3};
    out.emplace_back("cnn", c);
  }
  {
    EncoderConfig c;
    c.kind = EncoderKind::Rnn;
    c.embed_dim = 5;
    c.max_len = 8;
    c.rnn_layers = 2;
    c.rnn_hidden = 7;
    out.emplace_back("rnn", c);
  }
  {
    EncoderConfig c;
    c.kind = EncoderKind::Lstm;
    c.embed_dim = 5;
    c.max_len = 8;
    c.rnn_layers = 2;
    c.rnn_hidden = 4;
    c.bidirectional = true;
    out.emplace_back("lstm-bidir", c);
  }
  {
    EncoderConfig c;
    c.kind = EncoderKind::Lstm;
    c.embed_dim = 5;
    c.max_len = 8;
    c.rnn_layers = 1;
    c.rnn_hidden = 6;
    c.bidirectional = false;
    out.emplace_back("lstm", c);
  }
  {
    EncoderConfig c;
    c.kind = EncoderKind::MiniAttention;
    c.embed_dim = 8;
    c.max_len = 8;
    c.attn_layers = 2;
    c.model_dim = 8;
    c.heads = 2;
    c.ff_dim = 10;
    out.emplace_back("attention", c);
  }
  return out;
}

std::vector<std::pair<std::string, LossSpec>> gradcheck_losses() {
  LossSpec ce;
  LossSpec weighted;
  weighted.kind = LossKind::WeightedCrossEntropy;
  weighted.class_weights = {0.5, 2.0, 1.25};
  LossSpec focal;
  focal.kind = LossKind::Focal;
  focal.gamma = 2.0;
  return {{"ce", ce}, {"weighted", weighted}, {"focal", focal}};
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
  for (const auto& [enc_name, cfg] : gradcheck_configs()) {
    for (const auto& [loss_name, spec] : gradcheck_losses()) {
      CAPTURE(enc_name);
      CAPTURE(loss_name);
      const double err = max_gradcheck_error(cfg, spec);
      CHECK_MESSAGE(err < 1e-4, enc_name, " x ", loss_name, " rel err ", err);
    }
  }
}

TEST_CASE("gradcheck holds for an empty-sequence row") {
  EncoderConfig cfg;
  cfg.kind = EncoderKind::MeanPool;
  cfg.embed_dim = 4;
  cfg.max_len = 4;
  auto params = train::make_model(cfg, 6, {{"sentiment", 2}}, 3);
  schedule::Batch b;
  b.tokens = Eigen::MatrixXi::Constant(2, 4, model::Vocab::kPad);
  b.mask.setZero(2, 4);
  b.lengths = {0, 3};
  b.labels = {0, 1};
  b.task = corpus::Task::Sentiment;
  b.dataset_ids = {"toy", "toy"};
  b.tokens(1, 0) = 2;
  b.tokens(1, 1) = 3;
  b.tokens(1, 2) = 4;

  LossSpec ce;
  auto analytic = model::backward(params, b, "sentiment", ce).grads;
  for (auto& [name, tensor] : params.tensors) {
    const auto& a = analytic.at(name);
    for (Eigen::Index r = 0; r < tensor.rows(); ++r)
      for (Eigen::Index c = 0; c < tensor.cols(); ++c) {
        const double saved = tensor(r, c);
        tensor(r, c) = saved + kStep;
        double up = model::loss_value(params, b, "sentiment", ce);
        tensor(r, c) = saved - kStep;
        double down = model::loss_value(params, b, "sentiment", ce);
        tensor(r, c) = saved;
        double fd = (up - down) / (2.0 * kStep);
        CHECK(std::abs(a(r, c) - fd) <=
              std::max(1e-7, 1e-4 * std::max(std::abs(a(r, c)), std::abs(fd))));
      }
  }
}
