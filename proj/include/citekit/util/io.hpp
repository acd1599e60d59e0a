#ifndef CITEKIT_UTIL_IO_HPP
#define CITEKIT_UTIL_IO_HPP

#include <filesystem>
#include <string>

namespace citekit::util {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace citekit::util

#endif
