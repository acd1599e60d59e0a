#ifndef CITEKIT_UTIL_TEXT_HPP
#define CITEKIT_UTIL_TEXT_HPP

#include <string>
#include <string_view>
#include <vector>

namespace citekit::util {

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

// lowercase + collapse whitespace runs + trim; the duplicate-detection identity
std::string normalized_key(std::string_view text);

// Split on ASCII whitespace plus the common UTF-8 space code points
// (NBSP, U+2000..U+200A, LS, PS, U+3000, NEL).
std::vector<std::string> split_whitespace(std::string_view text);

// strip leading/trailing ASCII punctuation from a token
std::string strip_edge_punct(std::string_view token);

std::string format_double(double v, int decimals);
std::string format_full(double v);  // round-trip precision for CSV

}  // namespace citekit::util

#endif
