#include "citekit/corpus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "citekit/util/csv.hpp"
#include "citekit/util/error.hpp"
#include "citekit/util/io.hpp"
#include "citekit/util/rng.hpp"
#include "citekit/util/text.hpp"

namespace citekit::corpus {

namespace {

using util::Rng;

std::optional<SplitHint> parse_split_value(const std::string& raw, std::size_t row_number) {
  auto v = util::to_lower_ascii(util::trim(raw));
  if (v.empty()) return std::nullopt;
  if (v == "train" || v == "training") return SplitHint::Train;
  if (v == "val" || v == "validation" || v == "dev") return SplitHint::Val;
  if (v == "test") return SplitHint::Test;
  throw ValidationError("row " + std::to_string(row_number) + ": unknown split value '" + raw +
                        "'");
}

std::size_t resolve_column(const ColumnRef& ref, const std::vector<std::string>& header,
                           bool has_header, const std::string& what) {
  if (std::holds_alternative<std::size_t>(ref)) return std::get<std::size_t>(ref);
  const auto& name = std::get<std::string>(ref);
  if (!has_header)
    throw ValidationError("column '" + name + "' referenced by name but the file has no header");
  for (std::size_t i = 0; i < header.size(); ++i)
    if (util::trim(header[i]) == name) return i;
  throw ValidationError("declared " + what + " column '" + name + "' not found in header");
}

std::vector<RawRecord> ingest_delimited(const DatasetManifest& m, const std::string& content) {
  util::CsvDialect dialect{m.delimiter, m.quote};
  auto rows = util::parse_csv(content, dialect);
  if (rows.empty()) return {};

  std::vector<std::string> header;
  std::size_t first_data_row = 0;
  if (m.has_header) {
    header = rows[0];
    first_data_row = 1;
  }
  std::size_t text_col = resolve_column(m.columns.text, header, m.has_header, "text");
  std::size_t label_col = resolve_column(m.columns.label, header, m.has_header, "label");
  std::optional<std::size_t> split_col;
  if (m.columns.split)
    split_col = resolve_column(*m.columns.split, header, m.has_header, "split");

  std::vector<RawRecord> out;
  out.reserve(rows.size() - first_data_row);
  for (std::size_t r = first_data_row; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::size_t row_number = r + 1;
    if (row.size() == 1 && row[0].empty()) continue;  // trailing blank line
    std::size_t needed = std::max(text_col, label_col);
    if (split_col) needed = std::max(needed, *split_col);
    if (row.size() <= needed)
      throw ValidationError("row " + std::to_string(row_number) + ": expected at least " +
                            std::to_string(needed + 1) + " columns, got " +
                            std::to_string(row.size()));
    RawRecord rec;
    rec.text = row[text_col];
    rec.raw_label = util::trim(row[label_col]);
    rec.dataset_id = m.dataset_id;
    if (split_col) rec.split_hint = parse_split_value(row[*split_col], row_number);
    if (util::trim(rec.text).empty())
      throw ValidationError("row " + std::to_string(row_number) + ": empty text field");
    rec.source_fields = row;
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RawRecord> ingest_jsonl(const DatasetManifest& m, const std::string& content) {
  auto field_name = [](const ColumnRef& ref, const std::string& what) {
    if (!std::holds_alternative<std::string>(ref))
      throw ValidationError("json-lines requires a field name for the " + what + " column");
    return std::get<std::string>(ref);
  };
  const std::string text_field = field_name(m.columns.text, "text");
  const std::string label_field = field_name(m.columns.label, "label");
  std::optional<std::string> split_field;
  if (m.columns.split) split_field = field_name(*m.columns.split, "split");

  std::vector<RawRecord> out;
  std::istringstream in(content);
  std::string line;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    ++row_number;
    if (util::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("row " + std::to_string(row_number) + ": invalid JSON: " + e.what());
    }
    if (!j.contains(text_field) || !j.contains(label_field))
      throw ValidationError("row " + std::to_string(row_number) + ": missing '" + text_field +
                            "' or '" + label_field + "' field");
    RawRecord rec;
    rec.text = j.at(text_field).is_string() ? j.at(text_field).get<std::string>()
                                            : j.at(text_field).dump();
    const auto& lbl = j.at(label_field);
    rec.raw_label = lbl.is_string() ? util::trim(lbl.get<std::string>()) : lbl.dump();
    rec.dataset_id = m.dataset_id;
    if (split_field && j.contains(*split_field))
      rec.split_hint = parse_split_value(j.at(*split_field).get<std::string>(), row_number);
    if (util::trim(rec.text).empty())
      throw ValidationError("row " + std::to_string(row_number) + ": empty text field");
    rec.source_line = line;
    out.push_back(std::move(rec));
  }
  return out;
}

// Largest-remainder allocation of n items to the given ratios.
std::vector<std::size_t> allocate_counts(std::size_t n, const std::vector<double>& ratios) {
  std::vector<std::size_t> counts(ratios.size(), 0);
  std::vector<std::pair<double, std::size_t>> fracs;  // (-frac, index) for stable sort
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    double exact = static_cast<double>(n) * ratios[i];
    auto base = static_cast<std::size_t>(std::floor(exact + 1e-9));
    counts[i] = base;
    assigned += base;
    fracs.emplace_back(-(exact - static_cast<double>(base)), i);
  }
  std::stable_sort(fracs.begin(), fracs.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t j = 0; assigned < n; ++j, ++assigned) counts[fracs[j % fracs.size()].second]++;
  return counts;
}

std::vector<int> present_class_indices(const std::vector<HarmonizedRecord>& records) {
  std::set<int> seen;
  for (const auto& r : records) seen.insert(label_class_index(r.label));
  return {seen.begin(), seen.end()};
}

}  // namespace

std::vector<RawRecord> ingest(const DatasetManifest& manifest) {
  if (!std::filesystem::exists(manifest.file_path))
    throw ValidationError("dataset file not found: " + manifest.file_path.string());
  auto content = util::read_file(manifest.file_path);

  std::vector<RawRecord> records;
  switch (manifest.file_format) {
    case FileFormat::Csv:
    case FileFormat::Tsv: records = ingest_delimited(manifest, content); break;
    case FileFormat::JsonLines: records = ingest_jsonl(manifest, content); break;
  }

  // Unknown labels are a load error, never a silent drop.
  std::set<std::string> unmapped;
  for (const auto& r : records)
    if (!manifest.label_map.count(r.raw_label)) unmapped.insert(r.raw_label);
  if (!unmapped.empty()) {
    std::string list;
    for (const auto& l : unmapped) {
      if (!list.empty()) list += ", ";
      list += "'" + l + "'";
    }
    throw ValidationError("dataset '" + manifest.dataset_id +
                          "': labels without label_map entry: " + list);
  }
  return records;
}

std::vector<HarmonizedRecord> harmonize(const std::vector<RawRecord>& records,
                                        const DatasetManifest& manifest,
                                        bool binary_sentiment) {
  std::vector<HarmonizedRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    auto it = manifest.label_map.find(r.raw_label);
    if (it == manifest.label_map.end())
      throw ValidationError("unmapped label '" + r.raw_label + "' reached harmonize");
    const MappedLabel& mapped = it->second;
    if (mapped.drop) continue;
    if (binary_sentiment && manifest.task == Task::Sentiment && mapped.label == Label::Neutral)
      continue;
    HarmonizedRecord h;
    h.text = r.text;
    h.label = mapped.label;
    h.dataset_id = manifest.dataset_id;
    h.domain_tag = manifest.domain_tag;
    h.task = manifest.task;
    h.normalized_key = util::normalized_key(r.text);
    h.split_hint = r.split_hint;
    out.push_back(std::move(h));
  }
  return out;
}

std::pair<std::vector<std::size_t>, CleaningReport> dedup_keep_indices(
    const std::vector<HarmonizedRecord>& records) {
  for (const auto& r : records)
    if (r.task != records.front().task)
      throw ValidationError("dedup_clean: records mix tasks");

  struct Group {
    std::set<Label> labels;
    std::size_t first_index = 0;
  };
  std::unordered_map<std::string, Group> groups;
  groups.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = groups.try_emplace(records[i].normalized_key);
    Group& g = it->second;
    if (inserted) g.first_index = i;
    g.labels.insert(records[i].label);
  }

  std::vector<std::size_t> kept;
  kept.reserve(records.size());
  std::map<int, std::size_t> original_per_class, removed_per_class;
  std::map<int, Label> class_label;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    int c = label_class_index(r.label);
    original_per_class[c]++;
    class_label.emplace(c, r.label);
    const Group& g = groups.at(r.normalized_key);
    bool conflicting = g.labels.size() >= 2;
    bool keep = !conflicting && g.first_index == i;
    if (keep)
      kept.push_back(i);
    else
      removed_per_class[c]++;  // a conflicting record counts against its own class
  }

  CleaningReport report;
  report.total_original = records.size();
  report.total_remaining = kept.size();
  report.total_removed = records.size() - kept.size();
  report.total_removed_percent =
      records.empty() ? 0.0
                      : 100.0 * static_cast<double>(report.total_removed) /
                            static_cast<double>(report.total_original);
  for (const auto& [c, original] : original_per_class) {
    ClassAudit a;
    a.class_name = label_name(class_label.at(c));
    a.original = original;
    a.removed = removed_per_class.count(c) ? removed_per_class.at(c) : 0;
    a.remaining = a.original - a.removed;
    a.removed_percent =
        a.original == 0 ? 0.0 : 100.0 * static_cast<double>(a.removed) / a.original;
    a.remaining_dist = report.total_remaining == 0
                           ? 0.0
                           : 100.0 * static_cast<double>(a.remaining) / report.total_remaining;
    report.classes.push_back(a);
  }
  return {std::move(kept), std::move(report)};
}

std::pair<std::vector<HarmonizedRecord>, CleaningReport> dedup_clean(
    const std::vector<HarmonizedRecord>& records) {
  auto [kept_idx, report] = dedup_keep_indices(records);
  std::vector<HarmonizedRecord> kept;
  kept.reserve(kept_idx.size());
  for (auto i : kept_idx) kept.push_back(records[i]);
  return {std::move(kept), std::move(report)};
}

SplitResult split(const std::vector<HarmonizedRecord>& records,
                  const std::array<double, 3>& ratios, std::uint64_t seed, bool stratified) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("split ratios must sum to 1, got " + util::format_full(sum));
  for (double r : ratios)
    if (r < 0.0) throw ValidationError("split ratios must be non-negative");

  const std::vector<double> rvec{ratios[0], ratios[1], ratios[2]};
  std::size_t non_empty = 0;
  for (double r : rvec)
    if (r > 0.0) ++non_empty;

  std::vector<std::vector<std::size_t>> split_indices(3);
  Rng rng(seed);

  if (!stratified) {
    std::vector<std::size_t> idx(records.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    auto counts = allocate_counts(records.size(), rvec);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t j = 0; j < counts[s]; ++j) split_indices[s].push_back(idx[pos++]);
  } else {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < records.size(); ++i)
      by_class[label_class_index(records[i].label)].push_back(i);
    for (auto& [c, idx] : by_class) {
      if (idx.size() < non_empty)
        throw ValidationError("stratified split: class index " + std::to_string(c) + " has " +
                              std::to_string(idx.size()) + " records for " +
                              std::to_string(non_empty) + " non-empty splits");
      rng.shuffle(idx);
      auto counts = allocate_counts(idx.size(), rvec);
      std::size_t pos = 0;
      for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t j = 0; j < counts[s]; ++j) split_indices[s].push_back(idx[pos++]);
    }
  }

  SplitResult out;
  for (std::size_t s = 0; s < 3; ++s) {
    auto& idx = split_indices[s];
    std::sort(idx.begin(), idx.end());  // keep input order inside each split
    auto& dst = s == 0 ? out.train : s == 1 ? out.val : out.test;
    dst.reserve(idx.size());
    for (auto i : idx) dst.push_back(records[i]);
  }
  return out;
}

CorpusStats stats(const std::vector<HarmonizedRecord>& records) {
  if (records.empty()) throw ValidationError("stats: empty input");
  CorpusStats s;
  s.total = records.size();
  std::map<int, std::size_t> per_class;
  std::map<int, Label> class_label;
  for (const auto& r : records) {
    int c = label_class_index(r.label);
    per_class[c]++;
    class_label.emplace(c, r.label);
    if (r.split_hint) {
      switch (*r.split_hint) {
        case SplitHint::Train: s.train++; break;
        case SplitHint::Val: s.val++; break;
        case SplitHint::Test: s.test++; break;
      }
    }
  }
  for (const auto& [c, count] : per_class) {
    ClassStat cs;
    cs.class_name = label_name(class_label.at(c));
    cs.count = count;
    cs.percent = 100.0 * static_cast<double>(count) / static_cast<double>(s.total);
    s.classes.push_back(cs);
  }
  return s;
}

CorpusStats stats(const SplitResult& splits) {
  std::vector<HarmonizedRecord> all;
  all.reserve(splits.train.size() + splits.val.size() + splits.test.size());
  for (const auto* part : {&splits.train, &splits.val, &splits.test})
    all.insert(all.end(), part->begin(), part->end());
  auto s = stats(all);
  s.train = splits.train.size();
  s.val = splits.val.size();
  s.test = splits.test.size();
  return s;
}

FoldSet make_folds(const std::vector<HarmonizedRecord>& records, std::size_t k,
                   std::uint64_t seed, bool stratified) {
  if (k < 2) throw ValidationError("make_folds: k must be at least 2");
  if (records.size() < k)
    throw ValidationError("make_folds: k=" + std::to_string(k) + " exceeds record count " +
                          std::to_string(records.size()));

  FoldSet fs;
  fs.k = k;
  fs.folds.assign(k, {});
  Rng rng(seed);

  if (!stratified) {
    std::vector<std::size_t> idx(records.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    rng.shuffle(idx);
    std::size_t base = records.size() / k, extra = records.size() % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
      std::size_t take = base + (f < extra ? 1 : 0);
      for (std::size_t j = 0; j < take; ++j) fs.folds[f].push_back(idx[pos++]);
    }
  } else {
    // Rotate the fold that receives each class's remainder so overall fold
    // sizes stay within one of each other.
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < records.size(); ++i)
      by_class[label_class_index(records[i].label)].push_back(i);
    std::size_t extra_offset = 0;
    for (auto& [c, idx] : by_class) {
      rng.shuffle(idx);
      std::size_t base = idx.size() / k, extra = idx.size() % k;
      std::size_t pos = 0;
      for (std::size_t f = 0; f < k; ++f) {
        bool gets_extra = ((f + k - extra_offset % k) % k) < extra;
        std::size_t take = base + (gets_extra ? 1 : 0);
        for (std::size_t j = 0; j < take; ++j) fs.folds[f].push_back(idx[pos++]);
      }
      extra_offset += extra;
    }
  }
  for (auto& fold : fs.folds) std::sort(fold.begin(), fold.end());
  return fs;
}

std::string cleaning_report_csv(const CleaningReport& report) {
  std::string out = "class,original,clean,distribution_percent,removed,removed_percent\n";
  for (const auto& a : report.classes) {
    out += util::csv_join({a.class_name, std::to_string(a.original), std::to_string(a.remaining),
                           util::format_full(a.remaining_dist), std::to_string(a.removed),
                           util::format_full(a.removed_percent)});
  }
  out += util::csv_join({"TOTAL", std::to_string(report.total_original),
                         std::to_string(report.total_remaining), "100",
                         std::to_string(report.total_removed),
                         util::format_full(report.total_removed_percent)});
  return out;
}

std::string cleaning_report_markdown(const CleaningReport& report) {
  std::string out =
      "| Classes | Original | Clean | Clean Dist. [%] | Removed | Removed [%] |\n"
      "|---|---|---|---|---|---|\n";
  for (const auto& a : report.classes) {
    out += "| " + a.class_name + " | " + std::to_string(a.original) + " | " +
           std::to_string(a.remaining) + " | " + util::format_double(a.remaining_dist, 2) +
           " | " + std::to_string(a.removed) + " | " + util::format_double(a.removed_percent, 2) +
           " |\n";
  }
  out += "| Total | " + std::to_string(report.total_original) + " | " +
         std::to_string(report.total_remaining) + " | 100.00 | " +
         std::to_string(report.total_removed) + " | " +
         util::format_double(report.total_removed_percent, 2) + " |\n";
  return out;
}

PreparedDataset prepare_dataset(const DatasetManifest& manifest, bool binary_sentiment,
                                std::uint64_t seed) {
  auto raw = ingest(manifest);
  auto harmonized = harmonize(raw, manifest, binary_sentiment);
  // Cleaning runs over the concatenation of all splits so duplicates spanning
  // splits are caught before re-splitting.
  auto [clean, report] = dedup_clean(harmonized);

  PreparedDataset prepared;
  prepared.manifest = manifest;
  prepared.cleaning = report;

  bool any_hint = std::any_of(clean.begin(), clean.end(),
                              [](const auto& r) { return r.split_hint.has_value(); });
  if (any_hint) {
    SplitResult splits;
    for (auto& r : clean) {
      SplitHint h = r.split_hint.value_or(SplitHint::Train);
      (h == SplitHint::Train ? splits.train : h == SplitHint::Val ? splits.val : splits.test)
          .push_back(std::move(r));
    }
    if (splits.val.empty() && manifest.split_ratios[1] > 0.0 && !splits.train.empty()) {
      double val_frac =
          manifest.split_ratios[1] / (manifest.split_ratios[0] + manifest.split_ratios[1]);
      auto carved = split(splits.train, {1.0 - val_frac, val_frac, 0.0},
                          util::derive_seed(seed, "corpus.val-carve"),
                          manifest.stratified_or_default());
      splits.train = std::move(carved.train);
      splits.val = std::move(carved.val);
    }
    prepared.splits = std::move(splits);
  } else {
    prepared.splits = split(clean, manifest.split_ratios,
                            util::derive_seed(seed, "corpus.split"),
                            manifest.stratified_or_default());
  }
  prepared.statistics = stats(prepared.splits);
  return prepared;
}

}  // namespace citekit::corpus
