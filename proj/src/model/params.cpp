#include "citekit/model/params.hpp"

#include <cmath>

#include "citekit/util/error.hpp"
#include "citekit/util/rng.hpp"

namespace citekit::model {

namespace {

using util::Rng;

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform_real(lo, hi);
  return m;
}

// fan-in scaled uniform init; fan_in = input dimension = rows in x*W layout
Matrix dense_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  return uniform_matrix(rows, cols, -bound, bound, rng);
}

void add_dense(ModelParams& p, const std::string& name, Eigen::Index rows, Eigen::Index cols,
               std::uint64_t seed) {
  p.tensors[name] = dense_init(rows, cols, util::derive_seed(seed, "init." + name));
}

void add_zeros(ModelParams& p, const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  p.tensors[name] = Matrix::Zero(rows, cols);
}

void add_ones(ModelParams& p, const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  p.tensors[name] = Matrix::Ones(rows, cols);
}

}  // namespace

const Matrix& ModelParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw RuntimeFailure("missing tensor: " + name);
  return it->second;
}

Matrix& ModelParams::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw RuntimeFailure("missing tensor: " + name);
  return it->second;
}

bool ModelParams::all_finite() const {
  for (const auto& [name, t] : tensors)
    if (!t.allFinite()) return false;
  return true;
}

Matrix& Gradients::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw RuntimeFailure("missing gradient tensor: " + name);
  return it->second;
}

const Matrix& Gradients::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw RuntimeFailure("missing gradient tensor: " + name);
  return it->second;
}

std::string head_weight_name(const std::string& task) { return "head." + task + ".w"; }
std::string head_bias_name(const std::string& task) { return "head." + task + ".b"; }

ModelParams init_params(const EncoderConfig& config, int vocab_size, std::uint64_t seed) {
  config.validate();
  if (vocab_size < 2) throw ValidationError("init_params: vocab must include pad and unk");

  ModelParams p;
  p.config = config;
  p.vocab_size = vocab_size;

  {
    Rng rng(util::derive_seed(seed, "init.embed"));
    p.tensors["embed"] = uniform_matrix(vocab_size, config.embed_dim, -0.05, 0.05, rng);
  }

  const int d = config.embed_dim;
  switch (config.kind) {
    case EncoderKind::MeanPool: break;
    case EncoderKind::Cnn:
      for (int i = 0; i < config.cnn_layers; ++i) {
        const std::string base = "encoder.conv" + std::to_string(i);
        add_dense(p, base + ".w", static_cast<Eigen::Index>(config.cnn_widths[i]) * d,
                  config.cnn_filters, seed);
        add_zeros(p, base + ".b", 1, config.cnn_filters);
      }
      break;
    case EncoderKind::Rnn:
      for (int l = 0; l < config.rnn_layers; ++l) {
        const std::string base = "encoder.l" + std::to_string(l);
        const int din = l == 0 ? d : config.rnn_hidden;
        add_dense(p, base + ".wx", din, config.rnn_hidden, seed);
        add_dense(p, base + ".wh", config.rnn_hidden, config.rnn_hidden, seed);
        add_zeros(p, base + ".b", 1, config.rnn_hidden);
      }
      break;
    case EncoderKind::Lstm: {
      const int h = config.rnn_hidden;
      const int dirs = config.bidirectional ? 2 : 1;
      for (int l = 0; l < config.rnn_layers; ++l) {
        const int din = l == 0 ? d : h * dirs;
        for (int dir = 0; dir < dirs; ++dir) {
          const std::string base =
              "encoder.l" + std::to_string(l) + (dir == 0 ? ".fwd" : ".bwd");
          add_dense(p, base + ".wx", din, 4 * h, seed);
          add_dense(p, base + ".wh", h, 4 * h, seed);
          Matrix b = Matrix::Zero(1, 4 * h);
          b.block(0, h, 1, h).setOnes();  // forget gate bias starts open
          p.tensors[base + ".b"] = b;
        }
      }
      break;
    }
    case EncoderKind::MiniAttention:
      for (int l = 0; l < config.attn_layers; ++l) {
        const std::string base = "encoder.l" + std::to_string(l);
        for (const char* w : {".attn.wq", ".attn.wk", ".attn.wv", ".attn.wo"})
          add_dense(p, base + w, d, d, seed);
        for (const char* b : {".attn.bq", ".attn.bk", ".attn.bv", ".attn.bo"})
          add_zeros(p, base + b, 1, d);
        add_ones(p, base + ".ln1.g", 1, d);
        add_zeros(p, base + ".ln1.b", 1, d);
        add_ones(p, base + ".ln2.g", 1, d);
        add_zeros(p, base + ".ln2.b", 1, d);
        add_dense(p, base + ".ff.w1", d, config.ff_dim, seed);
        add_zeros(p, base + ".ff.b1", 1, config.ff_dim);
        add_dense(p, base + ".ff.w2", config.ff_dim, d, seed);
        add_zeros(p, base + ".ff.b2", 1, d);
      }
      break;
  }
  return p;
}

void register_head(ModelParams& params, const std::string& task, int n_classes,
                   std::uint64_t seed) {
  if (task.empty()) throw ValidationError("register_head: empty task tag");
  if (n_classes < 2) throw ValidationError("register_head: need at least 2 classes");
  if (params.heads.count(task))
    throw ValidationError("register_head: task '" + task + "' already registered");
  const int enc = params.config.encoder_output_dim();
  add_dense(params, head_weight_name(task), enc, n_classes, seed);
  add_zeros(params, head_bias_name(task), 1, n_classes);
  params.heads[task] = n_classes;
}

Gradients zero_gradients(const ModelParams& params) {
  Gradients g;
  for (const auto& [name, t] : params.tensors)
    g.tensors[name] = Matrix::Zero(t.rows(), t.cols());
  return g;
}

}  // namespace citekit::model
