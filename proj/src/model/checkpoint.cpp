#include "citekit/model/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "citekit/util/error.hpp"

namespace citekit::model {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_raw(std::ofstream& out, const void* data, std::size_t bytes) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void write_matrix(std::ofstream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v = m(r, c);
      write_raw(out, &v, sizeof(v));
    }
}

Matrix read_matrix(std::ifstream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double v;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      m(r, c) = v;
    }
  if (!in) throw RuntimeFailure("checkpoint: truncated tensor payload");
  return m;
}

json tensor_index(const std::map<std::string, Matrix>& tensors) {
  json idx = json::array();
  for (const auto& [name, t] : tensors)
    idx.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  return idx;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json header;
  header["encoder"] = json::parse(ckpt.params.config.to_json());
  header["vocab_size"] = ckpt.params.vocab_size;
  header["heads"] = ckpt.params.heads;
  header["vocab"] = {{"tokens", ckpt.vocab.tokens},
                     {"min_freq", ckpt.vocab.min_freq},
                     {"max_size", ckpt.vocab.max_size}};
  header["tensors"] = tensor_index(ckpt.params.tensors);
  header["rng_state"] = ckpt.rng_state;
  if (ckpt.opt) {
    header["opt"] = {{"step", ckpt.opt->step},
                     {"learning_rate", ckpt.opt->hyper.learning_rate},
                     {"beta1", ckpt.opt->hyper.beta1},
                     {"beta2", ckpt.opt->hyper.beta2},
                     {"epsilon", ckpt.opt->hyper.epsilon}};
  }
  const std::string header_text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write checkpoint: " + path.string());
  write_raw(out, kMagic, sizeof(kMagic));
  write_raw(out, &kVersion, sizeof(kVersion));
  std::uint64_t len = header_text.size();
  write_raw(out, &len, sizeof(len));
  write_raw(out, header_text.data(), header_text.size());
  for (const auto& [name, t] : ckpt.params.tensors) write_matrix(out, t);
  if (ckpt.opt) {
    for (const auto& [name, t] : ckpt.opt->m) write_matrix(out, t);
    for (const auto& [name, t] : ckpt.opt->v) write_matrix(out, t);
  }
  if (!out) throw RuntimeFailure("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ValidationError("not a checkpoint file: " + path.string());
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion)
    throw ValidationError("unsupported checkpoint version " + std::to_string(version));
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_text(len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ValidationError("checkpoint header truncated");

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("checkpoint header corrupt: ") + e.what());
  }

  Checkpoint ckpt;
  ckpt.params.config = EncoderConfig::from_json(header.at("encoder").dump());
  ckpt.params.vocab_size = header.at("vocab_size").get<int>();
  ckpt.params.heads = header.at("heads").get<std::map<std::string, int>>();
  ckpt.vocab.tokens = header.at("vocab").at("tokens").get<std::vector<std::string>>();
  ckpt.vocab.min_freq = header.at("vocab").at("min_freq").get<std::size_t>();
  ckpt.vocab.max_size = header.at("vocab").at("max_size").get<std::size_t>();
  for (std::size_t i = 0; i < ckpt.vocab.tokens.size(); ++i)
    ckpt.vocab.index[ckpt.vocab.tokens[i]] = static_cast<int>(i);
  ckpt.rng_state = header.value("rng_state", "");

  for (const auto& entry : header.at("tensors")) {
    auto name = entry.at("name").get<std::string>();
    ckpt.params.tensors[name] =
        read_matrix(in, entry.at("rows").get<Eigen::Index>(), entry.at("cols").get<Eigen::Index>());
  }
  if (header.contains("opt")) {
    OptState opt;
    opt.step = header.at("opt").at("step").get<std::int64_t>();
    opt.hyper.learning_rate = header.at("opt").at("learning_rate").get<double>();
    opt.hyper.beta1 = header.at("opt").at("beta1").get<double>();
    opt.hyper.beta2 = header.at("opt").at("beta2").get<double>();
    opt.hyper.epsilon = header.at("opt").at("epsilon").get<double>();
    for (const auto& entry : header.at("tensors")) {
      auto name = entry.at("name").get<std::string>();
      opt.m[name] = read_matrix(in, entry.at("rows").get<Eigen::Index>(),
                                entry.at("cols").get<Eigen::Index>());
    }
    for (const auto& entry : header.at("tensors")) {
      auto name = entry.at("name").get<std::string>();
      opt.v[name] = read_matrix(in, entry.at("rows").get<Eigen::Index>(),
                                entry.at("cols").get<Eigen::Index>());
    }
    ckpt.opt = std::move(opt);
  }
  return ckpt;
}

}  // namespace citekit::model
