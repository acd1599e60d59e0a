#include "citekit/model/config.hpp"

#include <json.hpp>

#include "citekit/util/error.hpp"
#include "citekit/util/text.hpp"

namespace citekit::model {

using nlohmann::json;

std::string encoder_kind_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::MeanPool: return "meanpool";
    case EncoderKind::Cnn: return "cnn";
    case EncoderKind::Rnn: return "rnn";
    case EncoderKind::Lstm: return "lstm";
    case EncoderKind::MiniAttention: return "attention";
  }
  return "?";
}

EncoderKind encoder_kind_from_string(const std::string& s) {
  auto v = util::to_lower_ascii(util::trim(s));
  if (v == "meanpool" || v == "mean-pool" || v == "mean_pool") return EncoderKind::MeanPool;
  if (v == "cnn") return EncoderKind::Cnn;
  if (v == "rnn") return EncoderKind::Rnn;
  if (v == "lstm") return EncoderKind::Lstm;
  if (v == "attention" || v == "mini-attention" || v == "miniattention")
    return EncoderKind::MiniAttention;
  throw ValidationError("unknown encoder variant: '" + s + "'");
}

void EncoderConfig::validate() const {
  if (embed_dim < 1) throw ValidationError("encoder: embed_dim must be positive");
  if (max_len < 1) throw ValidationError("encoder: max_len must be positive");
  switch (kind) {
    case EncoderKind::MeanPool: break;
    case EncoderKind::Cnn:
      if (cnn_layers < 1 || cnn_filters < 1)
        throw ValidationError("cnn: layers and filters must be positive");
      if (static_cast<int>(cnn_widths.size()) != cnn_layers)
        throw ValidationError("cnn: need exactly one convolution width per layer (got " +
                              std::to_string(cnn_widths.size()) + " widths for " +
                              std::to_string(cnn_layers) + " layers)");
      for (int w : cnn_widths)
        if (w < 1) throw ValidationError("cnn: widths must be positive");
      break;
    case EncoderKind::Rnn:
    case EncoderKind::Lstm:
      if (rnn_layers < 1 || rnn_hidden < 1)
        throw ValidationError("rnn/lstm: layers and hidden must be positive");
      break;
    case EncoderKind::MiniAttention:
      if (attn_layers < 1 || model_dim < 1 || heads < 1 || ff_dim < 1)
        throw ValidationError("attention: all dims must be positive");
      if (model_dim % heads != 0)
        throw ValidationError("attention: heads must divide model_dim");
      if (model_dim != embed_dim)
        throw ValidationError("attention: model_dim must equal embed_dim");
      break;
  }
}

int EncoderConfig::encoder_output_dim() const {
  switch (kind) {
    case EncoderKind::MeanPool: return embed_dim;
    case EncoderKind::Cnn: return cnn_layers * cnn_filters;
    case EncoderKind::Rnn: return rnn_hidden;
    case EncoderKind::Lstm: return rnn_hidden * (bidirectional ? 2 : 1);
    case EncoderKind::MiniAttention: return model_dim;
  }
  return 0;
}

std::string EncoderConfig::to_json() const {
  json j;
  j["variant"] = encoder_kind_name(kind);
  j["embed_dim"] = embed_dim;
  j["max_len"] = max_len;
  switch (kind) {
    case EncoderKind::Cnn:
      j["layers"] = cnn_layers;
      j["filters"] = cnn_filters;
      j["widths"] = cnn_widths;
      break;
    case EncoderKind::Rnn:
    case EncoderKind::Lstm:
      j["layers"] = rnn_layers;
      j["hidden"] = rnn_hidden;
      if (kind == EncoderKind::Lstm) j["bidirectional"] = bidirectional;
      break;
    case EncoderKind::MiniAttention:
      j["layers"] = attn_layers;
      j["model_dim"] = model_dim;
      j["heads"] = heads;
      j["ff_dim"] = ff_dim;
      break;
    case EncoderKind::MeanPool: break;
  }
  return j.dump();
}

EncoderConfig EncoderConfig::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("encoder config is not valid JSON: ") + e.what());
  }
  EncoderConfig c;
  try {
    c.kind = encoder_kind_from_string(j.at("variant").get<std::string>());
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.max_len = j.value("max_len", c.max_len);
    switch (c.kind) {
      case EncoderKind::Cnn:
        c.cnn_layers = j.value("layers", c.cnn_layers);
        c.cnn_filters = j.value("filters", c.cnn_filters);
        if (j.contains("widths")) c.cnn_widths = j.at("widths").get<std::vector<int>>();
        break;
      case EncoderKind::Rnn:
      case EncoderKind::Lstm:
        c.rnn_layers = j.value("layers", 1);
        c.rnn_hidden = j.value("hidden", 64);
        c.bidirectional = j.value("bidirectional", false);
        break;
      case EncoderKind::MiniAttention:
        c.attn_layers = j.value("layers", c.attn_layers);
        c.model_dim = j.value("model_dim", c.embed_dim);
        c.heads = j.value("heads", c.heads);
        c.ff_dim = j.value("ff_dim", c.ff_dim);
        break;
      case EncoderKind::MeanPool: break;
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("encoder config field error: ") + e.what());
  }
  c.validate();
  return c;
}

void LossSpec::validate(int n_classes) const {
  if (kind == LossKind::WeightedCrossEntropy) {
    if (static_cast<int>(class_weights.size()) != n_classes)
      throw ValidationError("weighted loss: need " + std::to_string(n_classes) +
                            " class weights, got " + std::to_string(class_weights.size()));
    for (double w : class_weights)
      if (w <= 0.0) throw ValidationError("weighted loss: class weights must be positive");
  }
  if (kind == LossKind::Focal && gamma < 0.0)
    throw ValidationError("focal loss: gamma must be non-negative");
}

std::string LossSpec::to_json() const {
  json j;
  switch (kind) {
    case LossKind::CrossEntropy: j["kind"] = "ce"; break;
    case LossKind::WeightedCrossEntropy:
      j["kind"] = "weighted";
      j["weights"] = class_weights;
      break;
    case LossKind::Focal:
      j["kind"] = "focal";
      j["gamma"] = gamma;
      break;
  }
  return j.dump();
}

LossSpec LossSpec::from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("loss spec is not valid JSON: ") + e.what());
  }
  LossSpec s;
  auto kind = util::to_lower_ascii(j.value("kind", "ce"));
  if (kind == "ce" || kind == "cross-entropy" || kind == "crossentropy")
    s.kind = LossKind::CrossEntropy;
  else if (kind == "weighted" || kind == "weighted-ce" || kind == "auto-weighted")
    s.kind = LossKind::WeightedCrossEntropy;
  else if (kind == "focal")
    s.kind = LossKind::Focal;
  else
    throw ValidationError("unknown loss kind: '" + kind + "'");
  if (j.contains("weights")) s.class_weights = j.at("weights").get<std::vector<double>>();
  s.gamma = j.value("gamma", 2.0);
  return s;
}

}  // namespace citekit::model
