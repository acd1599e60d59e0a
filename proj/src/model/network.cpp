#include "citekit/model/network.hpp"

#include <cmath>

#include "citekit/util/error.hpp"

namespace citekit::model {

namespace {

using schedule::Batch;

constexpr double kLayerNormEps = 1e-5;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

// ---------- shared helpers ----------

std::vector<int> sample_tokens(const Batch& batch, Eigen::Index row, int vocab_size) {
  const int len = batch.lengths[static_cast<std::size_t>(row)];
  std::vector<int> toks;
  toks.reserve(len);
  for (int j = 0; j < len; ++j) {
    int id = batch.tokens(row, j);
    if (id < 0 || id >= vocab_size)
      throw RuntimeFailure("token index " + std::to_string(id) + " outside vocab of size " +
                           std::to_string(vocab_size));
    toks.push_back(id);
  }
  return toks;
}

Matrix embed_rows(const Matrix& embedding, const std::vector<int>& toks) {
  Matrix x(static_cast<Eigen::Index>(toks.size()), embedding.cols());
  for (std::size_t j = 0; j < toks.size(); ++j) x.row(static_cast<Eigen::Index>(j)) = embedding.row(toks[j]);
  return x;
}

void scatter_embedding_grad(Matrix& dembed, const std::vector<int>& toks, const Matrix& dx) {
  for (std::size_t j = 0; j < toks.size(); ++j)
    dembed.row(toks[j]) += dx.row(static_cast<Eigen::Index>(j));
}

Eigen::RowVectorXd sigmoid(const Eigen::RowVectorXd& a) {
  return 1.0 / (1.0 + (-a.array()).exp());
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * std::exp(-0.5 * x * x) * kInvSqrt2Pi;
}

// ---------- per-sample encoder caches ----------

struct CnnBranch {
  Matrix act;                        // windows x filters, tanh applied
  std::vector<Eigen::Index> argmax;  // winning window per filter
};

struct RnnLayerCache {
  Matrix input;  // T x din
  Matrix h;      // T x hidden
};

struct LstmDirCache {
  Matrix i, f, g, o, c, tanh_c, h;  // T x hidden, indexed by position
};

struct LstmLayerCache {
  Matrix input;
  LstmDirCache dir[2];
};

struct LayerNormCache {
  Matrix xhat;             // T x d
  Eigen::VectorXd sigma;   // per row
};

struct AttnLayerCache {
  Matrix x_in;             // T x d
  Matrix q, k, v;          // T x d
  std::vector<Matrix> attn;  // per head: T x T row-softmax
  Matrix z;                // T x d, heads concatenated
  Matrix r1;               // x_in + attn output
  LayerNormCache ln1;
  Matrix x1;               // ln1 output
  Matrix ff_pre;           // T x ff
  Matrix ff_act;           // gelu(ff_pre)
  Matrix r2;               // x1 + ff output
  LayerNormCache ln2;
  Matrix x2;               // layer output
};

struct SampleCache {
  std::vector<int> toks;
  Matrix x;  // embedded input (T x embed_dim)
  // variant-specific
  std::vector<CnnBranch> cnn;
  std::vector<RnnLayerCache> rnn;
  std::vector<LstmLayerCache> lstm;
  std::vector<AttnLayerCache> attn;
  Matrix attn_top;  // final attention layer output
};

// ---------- layer norm ----------

Matrix layer_norm_forward(const Matrix& x, const Matrix& gain, const Matrix& bias,
                          LayerNormCache& cache) {
  const Eigen::Index t = x.rows(), d = x.cols();
  cache.xhat.resize(t, d);
  cache.sigma.resize(t);
  Matrix out(t, d);
  for (Eigen::Index r = 0; r < t; ++r) {
    const double mu = x.row(r).mean();
    Eigen::RowVectorXd centered = x.row(r).array() - mu;
    const double var = centered.squaredNorm() / static_cast<double>(d);
    const double sigma = std::sqrt(var + kLayerNormEps);
    cache.sigma(r) = sigma;
    cache.xhat.row(r) = centered / sigma;
    out.row(r) = cache.xhat.row(r).cwiseProduct(gain.row(0)) + bias.row(0);
  }
  return out;
}

void layer_norm_backward(const Matrix& dout, const LayerNormCache& cache, const Matrix& gain,
                         Matrix& dx, Matrix& dgain, Matrix& dbias) {
  const Eigen::Index t = dout.rows(), d = dout.cols();
  dx.resize(t, d);
  for (Eigen::Index r = 0; r < t; ++r) {
    dgain.row(0) += dout.row(r).cwiseProduct(cache.xhat.row(r));
    dbias.row(0) += dout.row(r);
    Eigen::RowVectorXd dxhat = dout.row(r).cwiseProduct(gain.row(0));
    const double mean_dxhat = dxhat.mean();
    const double mean_dxhat_xhat = dxhat.cwiseProduct(cache.xhat.row(r)).mean();
    dx.row(r) =
        (dxhat.array() - mean_dxhat - cache.xhat.row(r).array() * mean_dxhat_xhat) /
        cache.sigma(r);
  }
}

// ---------- encoders: forward ----------

RowVector meanpool_forward(SampleCache& cache) {
  if (cache.x.rows() == 0) return RowVector::Zero(cache.x.cols());
  return cache.x.colwise().mean();
}

RowVector cnn_forward(const ModelParams& p, SampleCache& cache) {
  const auto& cfg = p.config;
  RowVector pooled = RowVector::Zero(cfg.encoder_output_dim());
  cache.cnn.resize(cfg.cnn_layers);
  const Eigen::Index t = cache.x.rows();
  const Eigen::Index d = cfg.embed_dim;
  for (int br = 0; br < cfg.cnn_layers; ++br) {
    const int w = cfg.cnn_widths[br];
    const std::string base = "encoder.conv" + std::to_string(br);
    const Matrix& kernel = p.at(base + ".w");
    const Matrix& bias = p.at(base + ".b");
    const Eigen::Index wins = t - w + 1;
    CnnBranch& branch = cache.cnn[br];
    if (wins <= 0) continue;  // too short: branch contributes the zero vector
    branch.act.resize(wins, cfg.cnn_filters);
    Eigen::RowVectorXd window(static_cast<Eigen::Index>(w) * d);
    for (Eigen::Index pos = 0; pos < wins; ++pos) {
      for (int j = 0; j < w; ++j) window.segment(j * d, d) = cache.x.row(pos + j);
      branch.act.row(pos) = (window * kernel + bias.row(0)).array().tanh();
    }
    branch.argmax.assign(cfg.cnn_filters, 0);
    for (int f = 0; f < cfg.cnn_filters; ++f) {
      Eigen::Index best;
      branch.act.col(f).maxCoeff(&best);
      branch.argmax[f] = best;
      pooled(br * cfg.cnn_filters + f) = branch.act(best, f);
    }
  }
  return pooled;
}

RowVector rnn_forward(const ModelParams& p, SampleCache& cache) {
  const auto& cfg = p.config;
  const int h = cfg.rnn_hidden;
  if (cache.x.rows() == 0) return RowVector::Zero(h);
  cache.rnn.resize(cfg.rnn_layers);
  Matrix input = cache.x;
  for (int l = 0; l < cfg.rnn_layers; ++l) {
    const std::string base = "encoder.l" + std::to_string(l);
    const Matrix& wx = p.at(base + ".wx");
    const Matrix& wh = p.at(base + ".wh");
    const Matrix& b = p.at(base + ".b");
    RnnLayerCache& lc = cache.rnn[l];
    lc.input = input;
    const Eigen::Index t = input.rows();
    lc.h.resize(t, h);
    RowVector prev = RowVector::Zero(h);
    for (Eigen::Index step = 0; step < t; ++step) {
      lc.h.row(step) = (input.row(step) * wx + prev * wh + b.row(0)).array().tanh();
      prev = lc.h.row(step);
    }
    input = lc.h;
  }
  return cache.rnn.back().h.row(cache.rnn.back().h.rows() - 1);
}

void lstm_dir_forward(const Matrix& input, const Matrix& wx, const Matrix& wh, const Matrix& b,
                      bool reverse, LstmDirCache& dc) {
  const Eigen::Index t = input.rows();
  const Eigen::Index h = wh.rows();
  for (Matrix* m : {&dc.i, &dc.f, &dc.g, &dc.o, &dc.c, &dc.tanh_c, &dc.h}) m->resize(t, h);
  RowVector h_prev = RowVector::Zero(h), c_prev = RowVector::Zero(h);
  for (Eigen::Index step = 0; step < t; ++step) {
    const Eigen::Index pos = reverse ? t - 1 - step : step;
    Eigen::RowVectorXd a = input.row(pos) * wx + h_prev * wh + b.row(0);
    dc.i.row(pos) = sigmoid(a.segment(0, h));
    dc.f.row(pos) = sigmoid(a.segment(h, h));
    dc.g.row(pos) = a.segment(2 * h, h).array().tanh();
    dc.o.row(pos) = sigmoid(a.segment(3 * h, h));
    dc.c.row(pos) = dc.f.row(pos).cwiseProduct(c_prev) + dc.i.row(pos).cwiseProduct(dc.g.row(pos));
    dc.tanh_c.row(pos) = dc.c.row(pos).array().tanh();
    dc.h.row(pos) = dc.o.row(pos).cwiseProduct(dc.tanh_c.row(pos));
    h_prev = dc.h.row(pos);
    c_prev = dc.c.row(pos);
  }
}

RowVector lstm_forward(const ModelParams& p, SampleCache& cache) {
  const auto& cfg = p.config;
  const int h = cfg.rnn_hidden;
  const int dirs = cfg.bidirectional ? 2 : 1;
  if (cache.x.rows() == 0) return RowVector::Zero(h * dirs);
  cache.lstm.resize(cfg.rnn_layers);
  Matrix input = cache.x;
  for (int l = 0; l < cfg.rnn_layers; ++l) {
    LstmLayerCache& lc = cache.lstm[l];
    lc.input = input;
    const Eigen::Index t = input.rows();
    Matrix output(t, h * dirs);
    for (int dir = 0; dir < dirs; ++dir) {
      const std::string base = "encoder.l" + std::to_string(l) + (dir == 0 ? ".fwd" : ".bwd");
      lstm_dir_forward(input, p.at(base + ".wx"), p.at(base + ".wh"), p.at(base + ".b"),
                       dir == 1, lc.dir[dir]);
      output.middleCols(dir * h, h) = lc.dir[dir].h;
    }
    input = output;
  }
  const LstmLayerCache& top = cache.lstm.back();
  RowVector pooled(h * dirs);
  pooled.segment(0, h) = top.dir[0].h.row(top.dir[0].h.rows() - 1);
  if (dirs == 2) pooled.segment(h, h) = top.dir[1].h.row(0);
  return pooled;
}

Matrix sinusoidal_positions(Eigen::Index t, Eigen::Index d) {
  Matrix pe(t, d);
  for (Eigen::Index pos = 0; pos < t; ++pos) {
    for (Eigen::Index j = 0; j < d; j += 2) {
      const double angle =
          static_cast<double>(pos) /
          std::pow(10000.0, static_cast<double>(j) / static_cast<double>(d));
      pe(pos, j) = std::sin(angle);
      if (j + 1 < d) pe(pos, j + 1) = std::cos(angle);
    }
  }
  return pe;
}

RowVector attention_forward(const ModelParams& p, SampleCache& cache) {
  const auto& cfg = p.config;
  const Eigen::Index d = cfg.model_dim;
  if (cache.x.rows() == 0) return RowVector::Zero(d);
  const Eigen::Index t = cache.x.rows();
  const int heads = cfg.heads;
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  cache.attn.resize(cfg.attn_layers);
  Matrix x = cache.x + sinusoidal_positions(t, d);
  for (int l = 0; l < cfg.attn_layers; ++l) {
    const std::string base = "encoder.l" + std::to_string(l);
    AttnLayerCache& lc = cache.attn[l];
    lc.x_in = x;
    lc.q = x * p.at(base + ".attn.wq") + Matrix::Ones(t, 1) * p.at(base + ".attn.bq");
    lc.k = x * p.at(base + ".attn.wk") + Matrix::Ones(t, 1) * p.at(base + ".attn.bk");
    lc.v = x * p.at(base + ".attn.wv") + Matrix::Ones(t, 1) * p.at(base + ".attn.bv");
    lc.attn.resize(heads);
    lc.z.resize(t, d);
    for (int hd = 0; hd < heads; ++hd) {
      Matrix scores = scale * lc.q.middleCols(hd * dh, dh) *
                      lc.k.middleCols(hd * dh, dh).transpose();
      Matrix& a = lc.attn[hd];
      a = softmax(scores);
      lc.z.middleCols(hd * dh, dh) = a * lc.v.middleCols(hd * dh, dh);
    }
    Matrix o = lc.z * p.at(base + ".attn.wo") + Matrix::Ones(t, 1) * p.at(base + ".attn.bo");
    lc.r1 = x + o;
    lc.x1 = layer_norm_forward(lc.r1, p.at(base + ".ln1.g"), p.at(base + ".ln1.b"), lc.ln1);
    lc.ff_pre = lc.x1 * p.at(base + ".ff.w1") + Matrix::Ones(t, 1) * p.at(base + ".ff.b1");
    lc.ff_act = lc.ff_pre.unaryExpr([](double v) { return gelu(v); });
    Matrix f = lc.ff_act * p.at(base + ".ff.w2") + Matrix::Ones(t, 1) * p.at(base + ".ff.b2");
    lc.r2 = lc.x1 + f;
    lc.x2 = layer_norm_forward(lc.r2, p.at(base + ".ln2.g"), p.at(base + ".ln2.b"), lc.ln2);
    x = lc.x2;
  }
  cache.attn_top = x;
  return x.colwise().mean();
}

RowVector encode_sample(const ModelParams& p, SampleCache& cache) {
  switch (p.config.kind) {
    case EncoderKind::MeanPool: return meanpool_forward(cache);
    case EncoderKind::Cnn: return cnn_forward(p, cache);
    case EncoderKind::Rnn: return rnn_forward(p, cache);
    case EncoderKind::Lstm: return lstm_forward(p, cache);
    case EncoderKind::MiniAttention: return attention_forward(p, cache);
  }
  throw RuntimeFailure("unknown encoder kind");
}

// ---------- encoders: backward ----------

void meanpool_backward(const RowVector& dpooled, const SampleCache& cache, Gradients& grads) {
  const Eigen::Index t = cache.x.rows();
  if (t == 0) return;
  Matrix dx = Matrix::Ones(t, 1) * (dpooled / static_cast<double>(t));
  scatter_embedding_grad(grads.at("embed"), cache.toks, dx);
}

void cnn_backward(const ModelParams& p, const RowVector& dpooled, const SampleCache& cache,
                  Gradients& grads) {
  const auto& cfg = p.config;
  const Eigen::Index t = cache.x.rows();
  const Eigen::Index d = cfg.embed_dim;
  if (t == 0) return;
  Matrix dx = Matrix::Zero(t, d);
  for (int br = 0; br < cfg.cnn_layers; ++br) {
    const CnnBranch& branch = cache.cnn[br];
    if (branch.act.rows() == 0) continue;
    const int w = cfg.cnn_widths[br];
    const std::string base = "encoder.conv" + std::to_string(br);
    const Matrix& kernel = p.at(base + ".w");
    Matrix& dkernel = grads.at(base + ".w");
    Matrix& dbias = grads.at(base + ".b");
    Eigen::RowVectorXd window(static_cast<Eigen::Index>(w) * d);
    for (int f = 0; f < cfg.cnn_filters; ++f) {
      const double dm = dpooled(br * cfg.cnn_filters + f);
      if (dm == 0.0) continue;
      const Eigen::Index pos = branch.argmax[f];
      const double act = branch.act(pos, f);
      const double da = dm * (1.0 - act * act);  // through tanh
      for (int j = 0; j < w; ++j) window.segment(j * d, d) = cache.x.row(pos + j);
      dkernel.col(f) += da * window.transpose();
      dbias(0, f) += da;
      Eigen::VectorXd dwindow = da * kernel.col(f);
      for (int j = 0; j < w; ++j)
        dx.row(pos + j) += dwindow.segment(j * d, d).transpose();
    }
  }
  scatter_embedding_grad(grads.at("embed"), cache.toks, dx);
}

void rnn_backward(const ModelParams& p, const RowVector& dpooled, const SampleCache& cache,
                  Gradients& grads) {
  const auto& cfg = p.config;
  if (cache.x.rows() == 0) return;
  const Eigen::Index t = cache.x.rows();
  const int h = cfg.rnn_hidden;

  Matrix dh_seq = Matrix::Zero(t, h);
  dh_seq.row(t - 1) = dpooled;
  for (int l = cfg.rnn_layers - 1; l >= 0; --l) {
    const std::string base = "encoder.l" + std::to_string(l);
    const Matrix& wx = p.at(base + ".wx");
    const Matrix& wh = p.at(base + ".wh");
    const RnnLayerCache& lc = cache.rnn[l];
    Matrix dinput = Matrix::Zero(lc.input.rows(), lc.input.cols());
    RowVector dh_carry = RowVector::Zero(h);
    for (Eigen::Index step = t - 1; step >= 0; --step) {
      RowVector dh = dh_seq.row(step) + dh_carry;
      RowVector da =
          dh.cwiseProduct(RowVector::Ones(h) - lc.h.row(step).cwiseProduct(lc.h.row(step)));
      grads.at(base + ".wx") += lc.input.row(step).transpose() * da;
      if (step > 0) grads.at(base + ".wh") += lc.h.row(step - 1).transpose() * da;
      grads.at(base + ".b") += da;
      dinput.row(step) = da * wx.transpose();
      dh_carry = da * wh.transpose();
    }
    dh_seq = dinput;  // becomes the output gradient of the layer below
  }
  scatter_embedding_grad(grads.at("embed"), cache.toks, dh_seq);
}

void lstm_dir_backward(const Matrix& input, const Matrix& wx, const Matrix& wh,
                       const LstmDirCache& dc, const Matrix& dh_pos, bool reverse,
                       Matrix& dwx, Matrix& dwh, Matrix& db, Matrix& dinput) {
  const Eigen::Index t = input.rows();
  const Eigen::Index h = wh.rows();
  RowVector dh_carry = RowVector::Zero(h), dc_carry = RowVector::Zero(h);
  for (Eigen::Index step = 0; step < t; ++step) {
    // reverse of the processing order
    const Eigen::Index pos = reverse ? step : t - 1 - step;
    const bool has_prev = reverse ? (pos + 1 < t) : (pos > 0);
    const Eigen::Index prev = reverse ? pos + 1 : pos - 1;

    RowVector dh = dh_pos.row(pos) + dh_carry;
    RowVector d_o = dh.cwiseProduct(dc.tanh_c.row(pos));
    RowVector da_o = d_o.cwiseProduct(dc.o.row(pos))
                         .cwiseProduct(RowVector::Ones(h) - dc.o.row(pos));
    RowVector dcell =
        dh.cwiseProduct(dc.o.row(pos))
            .cwiseProduct(RowVector::Ones(h) - dc.tanh_c.row(pos).cwiseProduct(dc.tanh_c.row(pos))) +
        dc_carry;
    RowVector d_i = dcell.cwiseProduct(dc.g.row(pos));
    RowVector da_i =
        d_i.cwiseProduct(dc.i.row(pos)).cwiseProduct(RowVector::Ones(h) - dc.i.row(pos));
    RowVector c_prev = has_prev ? RowVector(dc.c.row(prev)) : RowVector::Zero(h);
    RowVector d_f = dcell.cwiseProduct(c_prev);
    RowVector da_f =
        d_f.cwiseProduct(dc.f.row(pos)).cwiseProduct(RowVector::Ones(h) - dc.f.row(pos));
    RowVector d_g = dcell.cwiseProduct(dc.i.row(pos));
    RowVector da_g =
        d_g.cwiseProduct(RowVector::Ones(h) - dc.g.row(pos).cwiseProduct(dc.g.row(pos)));
    dc_carry = dcell.cwiseProduct(dc.f.row(pos));

    RowVector da(4 * h);
    da.segment(0, h) = da_i;
    da.segment(h, h) = da_f;
    da.segment(2 * h, h) = da_g;
    da.segment(3 * h, h) = da_o;

    dwx += input.row(pos).transpose() * da;
    if (has_prev) dwh += dc.h.row(prev).transpose() * da;
    db += da;
    dinput.row(pos) += da * wx.transpose();
    dh_carry = da * wh.transpose();
  }
}

void lstm_backward(const ModelParams& p, const RowVector& dpooled, const SampleCache& cache,
                   Gradients& grads) {
  const auto& cfg = p.config;
  if (cache.x.rows() == 0) return;
  const Eigen::Index t = cache.x.rows();
  const int h = cfg.rnn_hidden;
  const int dirs = cfg.bidirectional ? 2 : 1;

  // gradient on each layer's output sequence (directions concatenated)
  Matrix dout = Matrix::Zero(t, h * dirs);
  dout.row(t - 1).segment(0, h) = dpooled.segment(0, h);
  if (dirs == 2) dout.row(0).segment(h, h) += dpooled.segment(h, h);

  for (int l = cfg.rnn_layers - 1; l >= 0; --l) {
    const LstmLayerCache& lc = cache.lstm[l];
    Matrix dinput = Matrix::Zero(lc.input.rows(), lc.input.cols());
    for (int dir = 0; dir < dirs; ++dir) {
      const std::string base = "encoder.l" + std::to_string(l) + (dir == 0 ? ".fwd" : ".bwd");
      lstm_dir_backward(lc.input, p.at(base + ".wx"), p.at(base + ".wh"), lc.dir[dir],
                        dout.middleCols(dir * h, h), dir == 1, grads.at(base + ".wx"),
                        grads.at(base + ".wh"), grads.at(base + ".b"), dinput);
    }
    dout = dinput;
  }
  scatter_embedding_grad(grads.at("embed"), cache.toks, dout);
}

void attention_backward(const ModelParams& p, const RowVector& dpooled, const SampleCache& cache,
                        Gradients& grads) {
  const auto& cfg = p.config;
  if (cache.x.rows() == 0) return;
  const Eigen::Index t = cache.x.rows();
  const Eigen::Index d = cfg.model_dim;
  const int heads = cfg.heads;
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // masked mean pooling
  Matrix dx = Matrix::Ones(t, 1) * (dpooled / static_cast<double>(t));

  for (int l = cfg.attn_layers - 1; l >= 0; --l) {
    const std::string base = "encoder.l" + std::to_string(l);
    const AttnLayerCache& lc = cache.attn[l];

    // ln2
    Matrix dr2;
    layer_norm_backward(dx, lc.ln2, p.at(base + ".ln2.g"), dr2, grads.at(base + ".ln2.g"),
                        grads.at(base + ".ln2.b"));
    // r2 = x1 + ff_act * w2 + b2
    Matrix dx1 = dr2;
    grads.at(base + ".ff.w2") += lc.ff_act.transpose() * dr2;
    grads.at(base + ".ff.b2") += dr2.colwise().sum();
    Matrix dff_act = dr2 * p.at(base + ".ff.w2").transpose();
    Matrix dff_pre =
        dff_act.cwiseProduct(lc.ff_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    grads.at(base + ".ff.w1") += lc.x1.transpose() * dff_pre;
    grads.at(base + ".ff.b1") += dff_pre.colwise().sum();
    dx1 += dff_pre * p.at(base + ".ff.w1").transpose();

    // ln1
    Matrix dr1;
    layer_norm_backward(dx1, lc.ln1, p.at(base + ".ln1.g"), dr1, grads.at(base + ".ln1.g"),
                        grads.at(base + ".ln1.b"));
    // r1 = x_in + z * wo + bo
    Matrix dx_in = dr1;
    grads.at(base + ".attn.wo") += lc.z.transpose() * dr1;
    grads.at(base + ".attn.bo") += dr1.colwise().sum();
    Matrix dz = dr1 * p.at(base + ".attn.wo").transpose();

    Matrix dq = Matrix::Zero(t, d), dk = Matrix::Zero(t, d), dv = Matrix::Zero(t, d);
    for (int hd = 0; hd < heads; ++hd) {
      const Matrix& a = lc.attn[hd];
      Matrix dzh = dz.middleCols(hd * dh, dh);
      Matrix vh = lc.v.middleCols(hd * dh, dh);
      Matrix da = dzh * vh.transpose();          // T x T
      dv.middleCols(hd * dh, dh) += a.transpose() * dzh;
      // softmax rows: ds = a .* (da - rowwise dot(da, a))
      Matrix ds(t, t);
      for (Eigen::Index r = 0; r < t; ++r) {
        const double dot = da.row(r).cwiseProduct(a.row(r)).sum();
        ds.row(r) = a.row(r).cwiseProduct((da.row(r).array() - dot).matrix());
      }
      Matrix qh = lc.q.middleCols(hd * dh, dh);
      Matrix kh = lc.k.middleCols(hd * dh, dh);
      dq.middleCols(hd * dh, dh) += scale * ds * kh;
      dk.middleCols(hd * dh, dh) += scale * ds.transpose() * qh;
    }
    grads.at(base + ".attn.wq") += lc.x_in.transpose() * dq;
    grads.at(base + ".attn.bq") += dq.colwise().sum();
    grads.at(base + ".attn.wk") += lc.x_in.transpose() * dk;
    grads.at(base + ".attn.bk") += dk.colwise().sum();
    grads.at(base + ".attn.wv") += lc.x_in.transpose() * dv;
    grads.at(base + ".attn.bv") += dv.colwise().sum();
    dx_in += dq * p.at(base + ".attn.wq").transpose() +
             dk * p.at(base + ".attn.wk").transpose() +
             dv * p.at(base + ".attn.wv").transpose();
    dx = dx_in;
  }
  // position encoding is constant, the remainder lands on the embedding rows
  scatter_embedding_grad(grads.at("embed"), cache.toks, dx);
}

void encoder_backward(const ModelParams& p, const RowVector& dpooled, const SampleCache& cache,
                      Gradients& grads) {
  switch (p.config.kind) {
    case EncoderKind::MeanPool: meanpool_backward(dpooled, cache, grads); break;
    case EncoderKind::Cnn: cnn_backward(p, dpooled, cache, grads); break;
    case EncoderKind::Rnn: rnn_backward(p, dpooled, cache, grads); break;
    case EncoderKind::Lstm: lstm_backward(p, dpooled, cache, grads); break;
    case EncoderKind::MiniAttention: attention_backward(p, dpooled, cache, grads); break;
  }
}

// ---------- batch plumbing ----------

void check_task(const ModelParams& params, const std::string& task) {
  if (!params.heads.count(task))
    throw ValidationError("no head registered for task '" + task + "'");
}

Matrix forward_with_caches(const ModelParams& params, const Batch& batch,
                           const std::string& task, std::vector<SampleCache>* caches,
                           Matrix* pooled_out) {
  check_task(params, task);
  const Eigen::Index b = batch.size();
  if (static_cast<Eigen::Index>(batch.lengths.size()) != b)
    throw ValidationError("batch lengths missing");
  const Matrix& embedding = params.at("embed");
  const Matrix& head_w = params.at(head_weight_name(task));
  const Matrix& head_b = params.at(head_bias_name(task));

  Matrix pooled(b, params.config.encoder_output_dim());
  if (caches) caches->resize(b);
  for (Eigen::Index r = 0; r < b; ++r) {
    SampleCache local;
    SampleCache& cache = caches ? (*caches)[r] : local;
    cache.toks = sample_tokens(batch, r, params.vocab_size);
    cache.x = embed_rows(embedding, cache.toks);
    pooled.row(r) = encode_sample(params, cache);
  }
  Matrix logits = pooled * head_w + Matrix::Ones(b, 1) * head_b;
  if (pooled_out) *pooled_out = std::move(pooled);
  return logits;
}

}  // namespace

Matrix forward(const ModelParams& params, const Batch& batch, const std::string& task) {
  return forward_with_caches(params, batch, task, nullptr, nullptr);
}

std::vector<int> predict(const ModelParams& params, const Batch& batch, const std::string& task) {
  Matrix logits = forward(params, batch, task);
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best;
    logits.row(r).maxCoeff(&best);
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

double loss_value(const ModelParams& params, const Batch& batch, const std::string& task,
                  const LossSpec& spec) {
  Matrix logits = forward(params, batch, task);
  return loss(logits, batch.labels, spec).value;
}

BackwardResult backward(const ModelParams& params, const Batch& batch, const std::string& task,
                        const LossSpec& spec) {
  std::vector<SampleCache> caches;
  Matrix pooled;
  Matrix logits = forward_with_caches(params, batch, task, &caches, &pooled);
  LossResult lr = loss(logits, batch.labels, spec);

  BackwardResult result;
  result.loss_value = lr.value;
  result.grads = zero_gradients(params);

  // head: logits = pooled * W + b
  Matrix& dw = result.grads.at(head_weight_name(task));
  Matrix& db = result.grads.at(head_bias_name(task));
  dw += pooled.transpose() * lr.dlogits;
  db += lr.dlogits.colwise().sum();
  Matrix dpooled = lr.dlogits * params.at(head_weight_name(task)).transpose();

  for (Eigen::Index r = 0; r < batch.size(); ++r)
    encoder_backward(params, dpooled.row(r), caches[static_cast<std::size_t>(r)], result.grads);
  return result;
}

Matrix embed_mean_pool(const ModelParams& params, const Batch& batch) {
  const Matrix& embedding = params.at("embed");
  Matrix out = Matrix::Zero(batch.size(), params.config.embed_dim);
  for (Eigen::Index r = 0; r < batch.size(); ++r) {
    auto toks = sample_tokens(batch, r, params.vocab_size);
    if (toks.empty()) continue;
    Matrix x = embed_rows(embedding, toks);
    out.row(r) = x.colwise().mean();
  }
  return out;
}

}  // namespace citekit::model
