#ifndef CITEKIT_MODEL_VOCAB_HPP
#define CITEKIT_MODEL_VOCAB_HPP

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

namespace citekit::model {

struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  std::vector<std::string> tokens;  // dense index -> token; [0]=<pad>, [1]=<unk>
  std::unordered_map<std::string, int> index;
  std::size_t min_freq = 1;
  std::size_t max_size = 50000;

  int size() const { return static_cast<int>(tokens.size()); }
  int lookup(const std::string& token) const {
    auto it = index.find(token);
    return it == index.end() ? kUnk : it->second;
  }
};

// Most frequent first; ties resolved by first appearance. max_size counts the
// two specials.
Vocab build_vocab(const std::vector<std::string>& texts, std::size_t min_freq,
                  std::size_t max_size);

// lowercase, split on whitespace, strip edge punctuation per token; empty
// tokens vanish; OOV -> unk; truncated to max_len
std::vector<int> tokenize(const std::string& text, const Vocab& vocab, std::size_t max_len);

// The token strings tokenize() would look up, before vocab mapping.
std::vector<std::string> normalize_tokens(const std::string& text);

}  // namespace citekit::model

#endif
