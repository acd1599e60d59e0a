#ifndef CITEKIT_UTIL_CSV_HPP
#define CITEKIT_UTIL_CSV_HPP

#include <string>
#include <string_view>
#include <vector>

namespace citekit::util {

struct CsvDialect {
  char delimiter = ',';
  char quote = '"';
};

// Parses a whole document. Quoted fields may contain delimiters, quotes
// (doubled) and newlines. Rows are returned verbatim, no trimming.
std::vector<std::vector<std::string>> parse_csv(std::string_view content,
                                                const CsvDialect& dialect = {});

std::string csv_escape(std::string_view field, const CsvDialect& dialect = {});
std::string csv_join(const std::vector<std::string>& fields, const CsvDialect& dialect = {});

}  // namespace citekit::util

#endif
