#ifndef CITEKIT_CORPUS_CORPUS_HPP
#define CITEKIT_CORPUS_CORPUS_HPP

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "citekit/corpus/manifest.hpp"
#include "citekit/corpus/types.hpp"

namespace citekit::corpus {

// Reads the dataset file named by the manifest, one RawRecord per data row in
// file order. Fails on missing files, malformed rows (with the row number) and
// raw labels that have no label_map entry.
std::vector<RawRecord> ingest(const DatasetManifest& manifest);

// Applies the label map. Drop-mapped records are removed; with binary_sentiment,
// Neutral maps to drop as well. Order preserved.
std::vector<HarmonizedRecord> harmonize(const std::vector<RawRecord>& records,
                                        const DatasetManifest& manifest,
                                        bool binary_sentiment = false);

// Duplicate cleaning keyed on normalized text. Same-label groups keep the first
// occurrence; groups with conflicting labels are removed entirely.
std::pair<std::vector<HarmonizedRecord>, CleaningReport> dedup_clean(
    const std::vector<HarmonizedRecord>& records);

// Same rule, but reports which input positions survive (the clean command maps
// these back onto raw file rows).
std::pair<std::vector<std::size_t>, CleaningReport> dedup_keep_indices(
    const std::vector<HarmonizedRecord>& records);

// Seeded disjoint split. Ratios must sum to 1. With stratified, every class's
// share of each split matches its global share within one record.
SplitResult split(const std::vector<HarmonizedRecord>& records,
                  const std::array<double, 3>& ratios, std::uint64_t seed, bool stratified);

CorpusStats stats(const std::vector<HarmonizedRecord>& records);
CorpusStats stats(const SplitResult& splits);

FoldSet make_folds(const std::vector<HarmonizedRecord>& records, std::size_t k,
                   std::uint64_t seed, bool stratified);

// Cleaning audit in the shape of the published comparison table.
std::string cleaning_report_csv(const CleaningReport& report);
std::string cleaning_report_markdown(const CleaningReport& report);

// Full per-dataset pipeline: ingest -> harmonize -> dedup over the whole file
// -> split. Records carrying split hints keep them; a missing val split is
// carved out of the hinted train portion by ratio.
struct PreparedDataset {
  DatasetManifest manifest;
  SplitResult splits;
  CleaningReport cleaning;
  CorpusStats statistics;
};

PreparedDataset prepare_dataset(const DatasetManifest& manifest, bool binary_sentiment,
                                std::uint64_t seed);

}  // namespace citekit::corpus

#endif
