#ifndef CITEKIT_MODEL_CONFIG_HPP
#define CITEKIT_MODEL_CONFIG_HPP

#include <string>
#include <vector>

namespace citekit::model {

enum class EncoderKind { MeanPool, Cnn, Rnn, Lstm, MiniAttention };

std::string encoder_kind_name(EncoderKind k);
EncoderKind encoder_kind_from_string(const std::string& s);

struct EncoderConfig {
  EncoderKind kind = EncoderKind::MeanPool;
  int embed_dim = 64;
  int max_len = 128;

  // CNN: parallel convolution branches, one width per layer, filters each,
  // max-over-time pooled and concatenated.
  int cnn_layers = 3;
  int cnn_filters = 100;
  std::vector<int> cnn_widths{3, 4, 5};

  // RNN / LSTM
  int rnn_layers = 1;
  int rnn_hidden = 64;
  bool bidirectional = false;

  // MiniAttention: requires embed_dim == model_dim and heads | model_dim
  int attn_layers = 2;
  int model_dim = 64;
  int heads = 4;
  int ff_dim = 128;

  void validate() const;
  int encoder_output_dim() const;

  std::string to_json() const;
  static EncoderConfig from_json(const std::string& json_text);
};

enum class LossKind { CrossEntropy, WeightedCrossEntropy, Focal };

struct LossSpec {
  LossKind kind = LossKind::CrossEntropy;
  std::vector<double> class_weights;  // WeightedCE, one per class
  double gamma = 2.0;                 // Focal

  void validate(int n_classes) const;
  std::string to_json() const;
  static LossSpec from_json(const std::string& json_text);
};

}  // namespace citekit::model

#endif
