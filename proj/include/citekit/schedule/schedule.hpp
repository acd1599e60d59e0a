#ifndef CITEKIT_SCHEDULE_SCHEDULE_HPP
#define CITEKIT_SCHEDULE_SCHEDULE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "citekit/corpus/types.hpp"
#include "citekit/model/vocab.hpp"
#include "citekit/schedule/batch.hpp"

namespace citekit::schedule {

struct SamplingSpec {
  enum class Mode { None, UpTo, DownToMin };
  Mode mode = Mode::None;
  std::size_t up_n = 3000;
  std::uint64_t seed = 0;

  static SamplingSpec parse(const std::string& text, std::uint64_t seed);  // "up:3000"|"down"|"none"
  std::string to_string() const;
};

// Size normalization. UpTo keeps every original and draws the remainder with
// replacement; DownToMin draws without replacement. Class distribution is not
// preserved either way.
std::vector<corpus::HarmonizedRecord> resample(const std::vector<corpus::HarmonizedRecord>& records,
                                               const SamplingSpec& spec,
                                               std::optional<std::size_t> smallest_size = {});

struct CategoryOrder {
  std::vector<corpus::Domain> categories;  // e.g. S, T, P, M
  std::map<corpus::Domain, std::vector<std::string>> within_category;  // dataset ids in order

  // "STPM" etc.; within-category order = dataset listing order
  static CategoryOrder from_code(const std::string& code,
                                 const std::vector<std::pair<std::string, corpus::Domain>>& datasets);
};

struct PlanDataset {
  std::string dataset_id;
  corpus::Domain domain_tag = corpus::Domain::Movie;
  corpus::Task task = corpus::Task::Sentiment;
  std::vector<corpus::HarmonizedRecord> records;
};

struct SampleRef {
  std::size_t dataset = 0;  // index into SchedulePlan::datasets
  std::size_t index = 0;    // record index within that dataset
};

enum class PlanKind { Sequential, Shuffled, MultiTask };
enum class MixPolicy { Proportional, Alternating };

// A resolved feeding plan. epoch_order / epoch_batches are deterministic per
// (plan seed, epoch index).
struct SchedulePlan {
  PlanKind kind = PlanKind::Sequential;
  std::vector<PlanDataset> datasets;  // sequential: already in feeding order
  std::uint64_t seed = 0;
  bool epoch_reshuffle = true;
  MixPolicy mix_policy = MixPolicy::Proportional;
  std::vector<std::size_t> category_boundaries;  // sequential: first dataset of each category

  std::size_t total_samples() const;
  std::vector<corpus::Task> tasks() const;

  // flat emission order for one epoch (Sequential/Shuffled)
  std::vector<SampleRef> epoch_order(std::size_t epoch) const;

  // task-homogeneous batch groups for one epoch (all plan kinds)
  std::vector<std::vector<SampleRef>> epoch_batches(std::size_t epoch,
                                                    std::size_t batch_size) const;

  const corpus::HarmonizedRecord& record(const SampleRef& ref) const {
    return datasets[ref.dataset].records[ref.index];
  }
};

SchedulePlan build_sequential(std::vector<PlanDataset> datasets, const CategoryOrder& order,
                              std::uint64_t seed, bool epoch_reshuffle = true);

SchedulePlan build_shuffled(std::vector<PlanDataset> datasets, std::uint64_t seed,
                            bool epoch_reshuffle = true);

SchedulePlan build_multitask(std::vector<PlanDataset> sentiment_datasets,
                             std::vector<PlanDataset> intent_datasets, MixPolicy mix_policy,
                             std::uint64_t seed, bool epoch_reshuffle = true);

// Tokenizes plan samples into padded batches; the final short batch is kept.
// Rows are padded to the longest sequence in the batch, capped at max_len.
class BatchIterator {
 public:
  BatchIterator(const SchedulePlan& plan, std::size_t epoch, std::size_t batch_size,
                std::size_t max_len, const model::Vocab& vocab);

  bool next(Batch& out);
  std::size_t batch_count() const { return groups_.size(); }

 private:
  const SchedulePlan* plan_;
  std::vector<std::vector<SampleRef>> groups_;
  std::size_t cursor_ = 0;
  std::size_t max_len_;
  const model::Vocab* vocab_;
};

// Convenience for tests and evaluation paths.
std::vector<Batch> collect_batches(const SchedulePlan& plan, std::size_t epoch,
                                   std::size_t batch_size, std::size_t max_len,
                                   const model::Vocab& vocab);

// A single batch straight from records (evaluation path).
Batch make_batch(const std::vector<corpus::HarmonizedRecord>& records, std::size_t max_len,
                 const model::Vocab& vocab);

}  // namespace citekit::schedule

#endif
