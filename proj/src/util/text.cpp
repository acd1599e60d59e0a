#include "citekit/util/text.hpp"

#include <cctype>
#include <cstdio>

namespace citekit::util {

namespace {

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Returns the byte length of a UTF-8 whitespace sequence starting at s[i], or 0.
std::size_t utf8_space_len(std::string_view s, std::size_t i) {
  unsigned char c = s[i];
  if (is_ascii_space(c)) return 1;
  auto rest = s.size() - i;
  if (c == 0xC2 && rest >= 2) {
    unsigned char c1 = s[i + 1];
    if (c1 == 0xA0 || c1 == 0x85) return 2;  // NBSP, NEL
  }
  if (c == 0xE2 && rest >= 3) {
    unsigned char c1 = s[i + 1], c2 = s[i + 2];
    if (c1 == 0x80 && ((c2 >= 0x80 && c2 <= 0x8A) || c2 == 0xA8 || c2 == 0xA9 || c2 == 0xAF))
      return 3;  // U+2000..200A, LS, PS, NNBSP
    if (c1 == 0x81 && c2 == 0x9F) return 3;  // U+205F
  }
  if (c == 0xE3 && rest >= 3 && static_cast<unsigned char>(s[i + 1]) == 0x80 &&
      static_cast<unsigned char>(s[i + 2]) == 0x80)
    return 3;  // U+3000
  return 0;
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_ascii_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string normalized_key(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t ws = utf8_space_len(text, i);
    if (ws > 0) {
      if (!out.empty()) pending_space = true;
      i += ws;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
    ++i;
  }
  return out;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t ws = utf8_space_len(text, i);
    if (ws > 0) {
      if (!cur.empty()) {
        tokens.push_back(std::move(cur));
        cur.clear();
      }
      i += ws;
    } else {
      cur.push_back(text[i]);
      ++i;
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::string strip_edge_punct(std::string_view token) {
  std::size_t b = 0, e = token.size();
  auto is_punct = [](unsigned char c) { return c < 0x80 && std::ispunct(c); };
  while (b < e && is_punct(static_cast<unsigned char>(token[b]))) ++b;
  while (e > b && is_punct(static_cast<unsigned char>(token[e - 1]))) --e;
  return std::string(token.substr(b, e - b));
}

std::string format_double(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace citekit::util
