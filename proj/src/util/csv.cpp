#include "citekit/util/csv.hpp"

#include <stdexcept>

namespace citekit::util {

std::vector<std::vector<std::string>> parse_csv(std::string_view content,
                                                const CsvDialect& dialect) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };

  std::size_t i = 0;
  const std::size_t n = content.size();
  while (i < n) {
    char c = content[i];
    if (in_quotes) {
      if (c == dialect.quote) {
        if (i + 1 < n && content[i + 1] == dialect.quote) {
          field.push_back(dialect.quote);
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.push_back(c);
        ++i;
      }
      continue;
    }
    if (c == dialect.quote && !field_started && field.empty()) {
      in_quotes = true;
      field_started = true;
      ++i;
    } else if (c == dialect.delimiter) {
      end_field();
      ++i;
    } else if (c == '\n') {
      end_row();
      ++i;
    } else if (c == '\r') {
      if (i + 1 < n && content[i + 1] == '\n') {
        end_row();
        i += 2;
      } else {
        end_row();
        ++i;
      }
    } else {
      field.push_back(c);
      field_started = true;
      ++i;
    }
  }
  if (in_quotes) throw std::runtime_error("csv: unterminated quoted field");
  // flush a final row without trailing newline
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

std::string csv_escape(std::string_view field, const CsvDialect& dialect) {
  bool needs_quote = false;
  for (char c : field) {
    if (c == dialect.delimiter || c == dialect.quote || c == '\n' || c == '\r') {
      needs_quote = true;
      break;
    }
  }
  if (!needs_quote) return std::string(field);
  std::string out;
  out.push_back(dialect.quote);
  for (char c : field) {
    if (c == dialect.quote) out.push_back(dialect.quote);
    out.push_back(c);
  }
  out.push_back(dialect.quote);
  return out;
}

std::string csv_join(const std::vector<std::string>& fields, const CsvDialect& dialect) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(dialect.delimiter);
    out += csv_escape(fields[i], dialect);
  }
  out.push_back('\n');
  return out;
}

}  // namespace citekit::util
