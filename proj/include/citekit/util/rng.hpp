#ifndef CITEKIT_UTIL_RNG_HPP
#define CITEKIT_UTIL_RNG_HPP

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace citekit::util {

// Deterministic seed derivation: every component draws from its own stream
// so adding a consumer never shifts another consumer's sequence.
// derive_seed(master, "model.init") etc.
std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index);

// mt19937_64 with hand-rolled bounded/real mappings. std::uniform_int_distribution
// and std::shuffle are implementation-defined, which would break bit-reproducibility
// across standard libraries; the engine output itself is specified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // unbiased draw in [0, bound) via rejection
  std::uint64_t below(std::uint64_t bound);

  // integer in [lo, hi] inclusive
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // [0, 1) with 53 random bits
  double real01();

  double uniform_real(double lo, double hi);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

  // k distinct indices drawn from [0, n), order randomized
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  std::string serialize() const;
  void deserialize(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

}  // namespace citekit::util

#endif
