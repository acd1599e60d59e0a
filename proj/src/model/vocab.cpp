#include "citekit/model/vocab.hpp"

#include <algorithm>

#include "citekit/util/error.hpp"
#include "citekit/util/text.hpp"

namespace citekit::model {

std::vector<std::string> normalize_tokens(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& raw : util::split_whitespace(util::to_lower_ascii(text))) {
    auto tok = util::strip_edge_punct(raw);
    if (!tok.empty()) out.push_back(std::move(tok));
  }
  return out;
}

Vocab build_vocab(const std::vector<std::string>& texts, std::size_t min_freq,
                  std::size_t max_size) {
  if (texts.empty()) throw ValidationError("build_vocab: no texts");
  if (max_size < 2) throw ValidationError("build_vocab: max_size must cover pad and unk");

  struct Entry {
    std::size_t freq = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> counts;
  std::size_t order = 0;
  for (const auto& text : texts) {
    for (auto& tok : normalize_tokens(text)) {
      auto [it, inserted] = counts.try_emplace(std::move(tok));
      if (inserted) it->second.first_seen = order++;
      it->second.freq++;
    }
  }

  std::vector<std::pair<std::string, Entry>> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second.freq != b.second.freq) return a.second.freq > b.second.freq;
    return a.second.first_seen < b.second.first_seen;
  });

  Vocab v;
  v.min_freq = min_freq;
  v.max_size = max_size;
  v.tokens = {"<pad>", "<unk>"};
  for (auto& [tok, e] : sorted) {
    if (e.freq < min_freq) break;
    if (v.tokens.size() >= max_size) break;
    v.tokens.push_back(tok);
  }
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = static_cast<int>(i);
  return v;
}

std::vector<int> tokenize(const std::string& text, const Vocab& vocab, std::size_t max_len) {
  std::vector<int> out;
  for (const auto& tok : normalize_tokens(text)) {
    if (out.size() >= max_len) break;
    out.push_back(vocab.lookup(tok));
  }
  return out;
}

}  // namespace citekit::model
