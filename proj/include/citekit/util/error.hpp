#ifndef CITEKIT_UTIL_ERROR_HPP
#define CITEKIT_UTIL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace citekit {

// Bad input: manifests, label maps, config values. CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Anything that breaks after validation passed. CLI exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace citekit

#endif
