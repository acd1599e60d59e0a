#include "citekit/corpus/manifest.hpp"

#include <json.hpp>

#include "citekit/util/error.hpp"
#include "citekit/util/io.hpp"
#include "citekit/util/text.hpp"

namespace citekit::corpus {

namespace {

using nlohmann::json;

FileFormat format_from_string(const std::string& s) {
  auto v = util::to_lower_ascii(util::trim(s));
  if (v == "csv") return FileFormat::Csv;
  if (v == "tsv") return FileFormat::Tsv;
  if (v == "jsonl" || v == "json-lines" || v == "jsonlines") return FileFormat::JsonLines;
  throw ValidationError("unknown file_format: '" + s + "' (expected csv|tsv|json-lines)");
}

ColumnRef parse_column_ref(const json& j, const std::string& what) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    auto v = j.get<long long>();
    if (v < 0) throw ValidationError("column index for '" + what + "' must be non-negative");
    return static_cast<std::size_t>(v);
  }
  if (j.is_string()) return j.get<std::string>();
  throw ValidationError("column reference for '" + what + "' must be an index or a name");
}

MappedLabel parse_mapped_label(const std::string& target, Task task) {
  auto v = util::to_lower_ascii(util::trim(target));
  if (v == "drop" || v == "skip") return MappedLabel{true, Label::Neutral};
  MappedLabel m{false, label_from_string(v)};
  bool sentiment_label = label_class_index(m.label) >= 0 &&
                         (m.label == Label::Positive || m.label == Label::Negative ||
                          m.label == Label::Neutral);
  if (task == Task::Sentiment && !sentiment_label)
    throw ValidationError("label_map target '" + target + "' is not a sentiment label");
  if (task == Task::Intent && sentiment_label)
    throw ValidationError("label_map target '" + target + "' is not an intent label");
  return m;
}

char parse_single_char(const json& j, const std::string& what) {
  auto s = j.get<std::string>();
  if (s == "\\t") return '\t';
  if (s.size() != 1) throw ValidationError(what + " must be a single character");
  return s[0];
}

}  // namespace

DatasetManifest parse_manifest_json(const std::string& json_text,
                                    const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest is not valid JSON: ") + e.what());
  }

  DatasetManifest m;
  try {
    m.dataset_id = j.at("dataset_id").get<std::string>();
    if (m.dataset_id.empty()) throw ValidationError("dataset_id must be non-empty");
    std::filesystem::path fp = j.at("file_path").get<std::string>();
    m.file_path = fp.is_absolute() ? fp : base_dir / fp;
    m.file_format = format_from_string(j.at("file_format").get<std::string>());
    m.domain_tag = domain_from_string(j.at("domain").get<std::string>());
    m.task = task_from_string(j.at("task").get<std::string>());

    const json& cols = j.at("columns");
    m.columns.text = parse_column_ref(cols.at("text"), "text");
    m.columns.label = parse_column_ref(cols.at("label"), "label");
    if (cols.contains("split")) m.columns.split = parse_column_ref(cols.at("split"), "split");

    if (j.contains("label_map")) {
      for (auto& [raw, target] : j.at("label_map").items())
        m.label_map[raw] = parse_mapped_label(target.get<std::string>(), m.task);
    } else if (m.task == Task::Sentiment && j.value("star_labels", false)) {
      m.label_map = product_star_label_map();
    } else {
      throw ValidationError("manifest '" + m.dataset_id + "' has no label_map");
    }

    m.delimiter = m.file_format == FileFormat::Tsv ? '\t' : ',';
    if (j.contains("delimiter")) m.delimiter = parse_single_char(j.at("delimiter"), "delimiter");
    if (j.contains("quote")) m.quote = parse_single_char(j.at("quote"), "quote");
    m.has_header = j.value("has_header", true);

    if (j.contains("split_ratios")) {
      auto r = j.at("split_ratios").get<std::vector<double>>();
      if (r.size() != 3) throw ValidationError("split_ratios must have 3 entries (train, val, test)");
      m.split_ratios = {r[0], r[1], r[2]};
    }
    if (j.contains("stratified")) m.stratified = j.at("stratified").get<bool>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest field error: ") + e.what());
  }
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& manifest_path) {
  auto text = util::read_file(manifest_path);
  auto base = manifest_path.has_parent_path() ? manifest_path.parent_path()
                                              : std::filesystem::path(".");
  return parse_manifest_json(text, base);
}

std::map<std::string, MappedLabel> product_star_label_map() {
  return {
      {"1", {false, Label::Negative}}, {"2", {false, Label::Negative}},
      {"3", {true, Label::Neutral}},
      {"4", {false, Label::Positive}}, {"5", {false, Label::Positive}},
  };
}

}  // namespace citekit::corpus
