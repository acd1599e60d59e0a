#ifndef CITEKIT_MODEL_CHECKPOINT_HPP
#define CITEKIT_MODEL_CHECKPOINT_HPP

#include <filesystem>
#include <optional>
#include <string>

#include "citekit/model/optimizer.hpp"
#include "citekit/model/params.hpp"
#include "citekit/model/vocab.hpp"

namespace citekit::model {

// Everything needed to resume or fine-tune: vocab, encoder config, parameter
// tensors, optimizer moments and the trainer RNG state. Tensor payload is raw
// 64-bit floats, so a save/load round trip is bit-exact.
struct Checkpoint {
  ModelParams params;
  Vocab vocab;
  std::optional<OptState> opt;
  std::string rng_state;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace citekit::model

#endif
