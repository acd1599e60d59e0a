#include "citekit/schedule/schedule.hpp"

#include <algorithm>
#include <set>

#include "citekit/util/error.hpp"
#include "citekit/util/rng.hpp"
#include "citekit/util/text.hpp"

namespace citekit::schedule {

namespace {
using corpus::Domain;
using corpus::HarmonizedRecord;
using corpus::Task;
using util::Rng;
}  // namespace

SamplingSpec SamplingSpec::parse(const std::string& text, std::uint64_t seed) {
  SamplingSpec s;
  s.seed = seed;
  auto v = util::to_lower_ascii(util::trim(text));
  if (v.empty() || v == "none") {
    s.mode = Mode::None;
  } else if (v == "down") {
    s.mode = Mode::DownToMin;
  } else if (v == "up" || v.rfind("up:", 0) == 0) {
    s.mode = Mode::UpTo;
    if (v.size() > 3) {
      try {
        long long n = std::stoll(v.substr(3));
        if (n <= 0) throw ValidationError("sampling 'up:n' requires n > 0");
        s.up_n = static_cast<std::size_t>(n);
      } catch (const std::invalid_argument&) {
        throw ValidationError("cannot parse sampling mode '" + text + "'");
      }
    }
  } else {
    throw ValidationError("unknown sampling mode '" + text + "' (expected up:N|down|none)");
  }
  return s;
}

std::string SamplingSpec::to_string() const {
  switch (mode) {
    case Mode::None: return "none";
    case Mode::DownToMin: return "down";
    case Mode::UpTo: return "up:" + std::to_string(up_n);
  }
  return "?";
}

std::vector<HarmonizedRecord> resample(const std::vector<HarmonizedRecord>& records,
                                       const SamplingSpec& spec,
                                       std::optional<std::size_t> smallest_size) {
  if (records.empty()) throw ValidationError("resample: no records");
  switch (spec.mode) {
    case SamplingSpec::Mode::None: return records;
    case SamplingSpec::Mode::UpTo: {
      Rng rng(util::derive_seed(spec.seed, "resample.up"));
      const std::size_t n = spec.up_n;
      std::vector<HarmonizedRecord> out;
      out.reserve(n);
      if (records.size() >= n) {
        auto idx = rng.sample_without_replacement(records.size(), n);
        std::sort(idx.begin(), idx.end());
        for (auto i : idx) out.push_back(records[i]);
      } else {
        // keep every original, then fill with replacement
        out = records;
        for (std::size_t i = records.size(); i < n; ++i)
          out.push_back(records[rng.below(records.size())]);
      }
      return out;
    }
    case SamplingSpec::Mode::DownToMin: {
      if (!smallest_size)
        throw ValidationError("resample: DownToMin requires the smallest dataset size");
      if (*smallest_size > records.size())
        throw ValidationError("resample: smallest size " + std::to_string(*smallest_size) +
                              " exceeds record count " + std::to_string(records.size()));
      Rng rng(util::derive_seed(spec.seed, "resample.down"));
      auto idx = rng.sample_without_replacement(records.size(), *smallest_size);
      std::sort(idx.begin(), idx.end());
      std::vector<HarmonizedRecord> out;
      out.reserve(idx.size());
      for (auto i : idx) out.push_back(records[i]);
      return out;
    }
  }
  throw RuntimeFailure("resample: unknown mode");
}

CategoryOrder CategoryOrder::from_code(
    const std::string& code, const std::vector<std::pair<std::string, Domain>>& datasets) {
  if (code.empty()) throw ValidationError("category order code is empty");
  CategoryOrder order;
  std::set<Domain> seen;
  for (char c : code) {
    Domain d = corpus::domain_from_string(std::string(1, c));
    if (!seen.insert(d).second)
      throw ValidationError("category order '" + code + "' repeats category '" +
                            std::string(1, c) + "'");
    order.categories.push_back(d);
  }
  for (const auto& [id, domain] : datasets) {
    if (!seen.count(domain))
      throw ValidationError("dataset '" + id + "' has domain " + corpus::domain_name(domain) +
                            " which is missing from order '" + code + "'");
    order.within_category[domain].push_back(id);
  }
  return order;
}

std::size_t SchedulePlan::total_samples() const {
  std::size_t n = 0;
  for (const auto& d : datasets) n += d.records.size();
  return n;
}

std::vector<Task> SchedulePlan::tasks() const {
  std::vector<Task> out;
  for (const auto& d : datasets)
    if (std::find(out.begin(), out.end(), d.task) == out.end()) out.push_back(d.task);
  return out;
}

std::vector<SampleRef> SchedulePlan::epoch_order(std::size_t epoch) const {
  const std::size_t effective = epoch_reshuffle ? epoch : 0;
  std::vector<SampleRef> refs;
  refs.reserve(total_samples());
  switch (kind) {
    case PlanKind::Sequential: {
      for (std::size_t ds = 0; ds < datasets.size(); ++ds) {
        std::vector<std::size_t> idx(datasets[ds].records.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        Rng rng(util::derive_seed(util::derive_seed(seed, "plan.within", ds), "epoch", effective));
        rng.shuffle(idx);
        for (auto i : idx) refs.push_back({ds, i});
      }
      return refs;
    }
    case PlanKind::Shuffled: {
      for (std::size_t ds = 0; ds < datasets.size(); ++ds)
        for (std::size_t i = 0; i < datasets[ds].records.size(); ++i) refs.push_back({ds, i});
      Rng rng(util::derive_seed(util::derive_seed(seed, "plan.global"), "epoch", effective));
      rng.shuffle(refs);
      return refs;
    }
    case PlanKind::MultiTask:
      throw ValidationError("multi-task plans emit batches, not a flat order");
  }
  return refs;
}

std::vector<std::vector<SampleRef>> SchedulePlan::epoch_batches(std::size_t epoch,
                                                                std::size_t batch_size) const {
  if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
  std::vector<std::vector<SampleRef>> groups;

  auto chunk = [&](const std::vector<SampleRef>& order) {
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      std::size_t stop = std::min(order.size(), start + batch_size);
      groups.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                          order.begin() + static_cast<std::ptrdiff_t>(stop));
    }
  };

  if (kind != PlanKind::MultiTask) {
    chunk(epoch_order(epoch));
    return groups;
  }

  // Task-homogeneous batches: shuffle each task's union, chunk per task, then
  // interleave the batch lists.
  const std::size_t effective = epoch_reshuffle ? epoch : 0;
  auto task_list = tasks();
  std::vector<std::vector<std::vector<SampleRef>>> per_task_batches;
  for (std::size_t t = 0; t < task_list.size(); ++t) {
    std::vector<SampleRef> refs;
    for (std::size_t ds = 0; ds < datasets.size(); ++ds)
      if (datasets[ds].task == task_list[t])
        for (std::size_t i = 0; i < datasets[ds].records.size(); ++i) refs.push_back({ds, i});
    Rng rng(util::derive_seed(util::derive_seed(seed, "plan.task", t), "epoch", effective));
    rng.shuffle(refs);
    std::vector<std::vector<SampleRef>> batches;
    for (std::size_t start = 0; start < refs.size(); start += batch_size) {
      std::size_t stop = std::min(refs.size(), start + batch_size);
      batches.emplace_back(refs.begin() + static_cast<std::ptrdiff_t>(start),
                           refs.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    per_task_batches.push_back(std::move(batches));
  }

  std::vector<std::size_t> cursor(per_task_batches.size(), 0);
  if (mix_policy == MixPolicy::Alternating) {
    bool any = true;
    while (any) {
      any = false;
      for (std::size_t t = 0; t < per_task_batches.size(); ++t) {
        if (cursor[t] < per_task_batches[t].size()) {
          groups.push_back(std::move(per_task_batches[t][cursor[t]++]));
          any = true;
        }
      }
    }
  } else {
    // smooth weighted round-robin; weight = task batch count
    std::vector<double> weight, current(per_task_batches.size(), 0.0);
    double total_weight = 0.0;
    for (const auto& b : per_task_batches) {
      weight.push_back(static_cast<double>(b.size()));
      total_weight += static_cast<double>(b.size());
    }
    std::size_t remaining = static_cast<std::size_t>(total_weight);
    while (remaining > 0) {
      std::size_t best = per_task_batches.size();
      for (std::size_t t = 0; t < per_task_batches.size(); ++t) {
        if (cursor[t] >= per_task_batches[t].size()) continue;
        current[t] += weight[t];
        if (best == per_task_batches.size() || current[t] > current[best]) best = t;
      }
      groups.push_back(std::move(per_task_batches[best][cursor[best]++]));
      current[best] -= total_weight;
      --remaining;
    }
  }
  return groups;
}

SchedulePlan build_sequential(std::vector<PlanDataset> datasets, const CategoryOrder& order,
                              std::uint64_t seed, bool epoch_reshuffle) {
  if (datasets.empty()) throw ValidationError("build_sequential: no datasets");
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    if (!by_id.emplace(datasets[i].dataset_id, i).second)
      throw ValidationError("duplicate dataset id '" + datasets[i].dataset_id + "'");
  }

  SchedulePlan plan;
  plan.kind = PlanKind::Sequential;
  plan.seed = seed;
  plan.epoch_reshuffle = epoch_reshuffle;

  std::set<std::string> placed;
  for (Domain cat : order.categories) {
    auto it = order.within_category.find(cat);
    if (it == order.within_category.end()) continue;
    bool first_in_category = true;
    for (const auto& id : it->second) {
      auto ds = by_id.find(id);
      if (ds == by_id.end())
        throw ValidationError("category order references unknown dataset '" + id + "'");
      if (datasets[ds->second].domain_tag != cat)
        throw ValidationError("dataset '" + id + "' is not in category " +
                              corpus::domain_name(cat));
      if (first_in_category) {
        plan.category_boundaries.push_back(plan.datasets.size());
        first_in_category = false;
      }
      plan.datasets.push_back(std::move(datasets[ds->second]));
      placed.insert(id);
    }
  }
  for (const auto& [id, idx] : by_id)
    if (!placed.count(id))
      throw ValidationError("dataset '" + id + "' has a category outside the declared order");
  return plan;
}

SchedulePlan build_shuffled(std::vector<PlanDataset> datasets, std::uint64_t seed,
                            bool epoch_reshuffle) {
  SchedulePlan plan;
  plan.kind = PlanKind::Shuffled;
  plan.seed = seed;
  plan.epoch_reshuffle = epoch_reshuffle;
  plan.datasets = std::move(datasets);
  if (plan.total_samples() == 0) throw ValidationError("build_shuffled: empty sample union");
  return plan;
}

SchedulePlan build_multitask(std::vector<PlanDataset> sentiment_datasets,
                             std::vector<PlanDataset> intent_datasets, MixPolicy mix_policy,
                             std::uint64_t seed, bool epoch_reshuffle) {
  std::size_t sent = 0, intent = 0;
  for (const auto& d : sentiment_datasets) {
    if (d.task != Task::Sentiment)
      throw ValidationError("dataset '" + d.dataset_id + "' is not a sentiment dataset");
    sent += d.records.size();
  }
  for (const auto& d : intent_datasets) {
    if (d.task != Task::Intent)
      throw ValidationError("dataset '" + d.dataset_id + "' is not an intent dataset");
    intent += d.records.size();
  }
  if (sent == 0) throw ValidationError("build_multitask: sentiment task has no samples");
  if (intent == 0) throw ValidationError("build_multitask: intent task has no samples");

  SchedulePlan plan;
  plan.kind = PlanKind::MultiTask;
  plan.seed = seed;
  plan.epoch_reshuffle = epoch_reshuffle;
  plan.mix_policy = mix_policy;
  plan.datasets = std::move(sentiment_datasets);
  for (auto& d : intent_datasets) plan.datasets.push_back(std::move(d));
  return plan;
}

Batch make_batch(const std::vector<HarmonizedRecord>& records, std::size_t max_len,
                 const model::Vocab& vocab) {
  if (records.empty()) throw ValidationError("make_batch: empty batch");
  const Task task = records.front().task;
  Batch batch;
  batch.task = task;
  std::vector<std::vector<int>> token_rows;
  std::size_t width = 1;
  for (const auto& r : records) {
    if (r.task != task) throw ValidationError("make_batch: records mix tasks");
    auto toks = model::tokenize(r.text, vocab, max_len);
    width = std::max(width, toks.size());
    batch.lengths.push_back(static_cast<int>(toks.size()));
    batch.labels.push_back(corpus::label_class_index(r.label));
    batch.dataset_ids.push_back(r.dataset_id);
    token_rows.push_back(std::move(toks));
  }
  const Eigen::Index b = static_cast<Eigen::Index>(records.size());
  batch.tokens = Eigen::MatrixXi::Constant(b, static_cast<Eigen::Index>(width), model::Vocab::kPad);
  batch.mask.setZero(b, static_cast<Eigen::Index>(width));
  for (Eigen::Index r = 0; r < b; ++r) {
    for (std::size_t j = 0; j < token_rows[static_cast<std::size_t>(r)].size(); ++j) {
      batch.tokens(r, static_cast<Eigen::Index>(j)) = token_rows[static_cast<std::size_t>(r)][j];
      batch.mask(r, static_cast<Eigen::Index>(j)) = 1;
    }
  }
  return batch;
}

BatchIterator::BatchIterator(const SchedulePlan& plan, std::size_t epoch, std::size_t batch_size,
                             std::size_t max_len, const model::Vocab& vocab)
    : plan_(&plan),
      groups_(plan.epoch_batches(epoch, batch_size)),
      max_len_(max_len),
      vocab_(&vocab) {}

bool BatchIterator::next(Batch& out) {
  if (cursor_ >= groups_.size()) return false;
  const auto& group = groups_[cursor_++];
  std::vector<HarmonizedRecord> records;
  records.reserve(group.size());
  for (const auto& ref : group) records.push_back(plan_->record(ref));
  out = make_batch(records, max_len_, *vocab_);
  return true;
}

std::vector<Batch> collect_batches(const SchedulePlan& plan, std::size_t epoch,
                                   std::size_t batch_size, std::size_t max_len,
                                   const model::Vocab& vocab) {
  BatchIterator it(plan, epoch, batch_size, max_len, vocab);
  std::vector<Batch> out;
  Batch b;
  while (it.next(b)) out.push_back(std::move(b));
  return out;
}

}  // namespace citekit::schedule
