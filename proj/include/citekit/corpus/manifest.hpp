#ifndef CITEKIT_CORPUS_MANIFEST_HPP
#define CITEKIT_CORPUS_MANIFEST_HPP

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "citekit/corpus/types.hpp"

namespace citekit::corpus {

enum class FileFormat { Csv, Tsv, JsonLines };

// Either a real label or a drop marker (e.g. 3-star reviews).
struct MappedLabel {
  bool drop = false;
  Label label = Label::Neutral;
};

// Column reference: numeric index, or header/field name.
using ColumnRef = std::variant<std::size_t, std::string>;

struct ColumnMap {
  ColumnRef text;
  ColumnRef label;
  std::optional<ColumnRef> split;
};

struct DatasetManifest {
  std::string dataset_id;
  std::filesystem::path file_path;
  FileFormat file_format = FileFormat::Csv;
  ColumnMap columns;
  std::map<std::string, MappedLabel> label_map;
  Domain domain_tag = Domain::Movie;
  Task task = Task::Sentiment;

  char delimiter = ',';
  char quote = '"';
  bool has_header = true;

  // split policy when the file carries no split column
  std::array<double, 3> split_ratios{0.7, 0.1, 0.2};
  std::optional<bool> stratified;  // default: on for Scientific, off elsewhere

  bool stratified_or_default() const {
    return stratified.value_or(domain_tag == Domain::Scientific);
  }
};

// Parses a manifest JSON document. `base_dir` resolves relative file paths.
DatasetManifest load_manifest(const std::filesystem::path& manifest_path);
DatasetManifest parse_manifest_json(const std::string& json_text,
                                    const std::filesystem::path& base_dir);

// Default star-rating mapping for product reviews: 1,2 -> Negative; 3 -> drop;
// 4,5 -> Positive.
std::map<std::string, MappedLabel> product_star_label_map();

}  // namespace citekit::corpus

#endif
