#include "citekit/eval/crossval.hpp"

#include "citekit/corpus/corpus.hpp"
#include "citekit/schedule/schedule.hpp"
#include "citekit/util/error.hpp"
#include "citekit/util/rng.hpp"

namespace citekit::eval {

namespace {
using corpus::HarmonizedRecord;
}

CrossValResult cross_validate(const std::vector<HarmonizedRecord>& records, std::size_t k,
                              bool stratified, std::uint64_t seed, int n_classes,
                              const FoldLearner& learner) {
  auto folds = corpus::make_folds(records, k, util::derive_seed(seed, "folds"), stratified);

  CrossValResult result;
  std::vector<double> recall_sum(static_cast<std::size_t>(n_classes), 0.0);
  std::vector<std::size_t> recall_count(static_cast<std::size_t>(n_classes), 0);

  for (std::size_t f = 0; f < folds.k; ++f) {
    std::vector<HarmonizedRecord> train_records, test_records;
    std::vector<char> in_test(records.size(), 0);
    for (auto i : folds.folds[f]) in_test[i] = 1;
    for (std::size_t i = 0; i < records.size(); ++i)
      (in_test[i] ? test_records : train_records).push_back(records[i]);

    auto pred = learner(train_records, test_records, util::derive_seed(seed, "fold", f));
    if (pred.size() != test_records.size())
      throw RuntimeFailure("cross_validate: learner returned " + std::to_string(pred.size()) +
                           " predictions for " + std::to_string(test_records.size()) +
                           " test records");
    std::vector<int> gold;
    gold.reserve(test_records.size());
    for (const auto& r : test_records) gold.push_back(corpus::label_class_index(r.label));

    auto report = evaluate(gold, pred, n_classes, "fold-" + std::to_string(f), "");
    result.mean_macro_f1 += report.macro_f1;
    result.mean_micro_f1 += report.micro_f1;
    result.mean_accuracy += report.accuracy;
    for (int c = 0; c < n_classes; ++c) {
      if (report.per_class_accuracy[static_cast<std::size_t>(c)]) {
        recall_sum[static_cast<std::size_t>(c)] +=
            *report.per_class_accuracy[static_cast<std::size_t>(c)];
        recall_count[static_cast<std::size_t>(c)]++;
      }
    }
    result.fold_reports.push_back(std::move(report));
  }

  const double kd = static_cast<double>(folds.k);
  result.mean_macro_f1 /= kd;
  result.mean_micro_f1 /= kd;
  result.mean_accuracy /= kd;
  for (int c = 0; c < n_classes; ++c) {
    if (recall_count[static_cast<std::size_t>(c)] == 0)
      result.mean_per_class_recall.push_back(std::nullopt);
    else
      result.mean_per_class_recall.push_back(
          recall_sum[static_cast<std::size_t>(c)] /
          static_cast<double>(recall_count[static_cast<std::size_t>(c)]));
  }
  return result;
}

FoldLearner make_model_fold_learner(const model::EncoderConfig& model_cfg,
                                    const train::TrainConfig& train_cfg, int n_classes,
                                    double val_fraction) {
  if (val_fraction <= 0.0 || val_fraction >= 1.0)
    throw ValidationError("fold learner: val_fraction must lie in (0, 1)");
  return [model_cfg, train_cfg, n_classes, val_fraction](
             const std::vector<HarmonizedRecord>& train_records,
             const std::vector<HarmonizedRecord>& test_records,
             std::uint64_t fold_seed) -> std::vector<int> {
    // early-stopping slice out of the training folds
    auto carved = corpus::split(train_records, {1.0 - val_fraction, val_fraction, 0.0},
                                util::derive_seed(fold_seed, "cv.val"), true);
    const std::string task = corpus::task_name(train_records.front().task);

    std::vector<std::string> texts;
    texts.reserve(carved.train.size());
    for (const auto& r : carved.train) texts.push_back(r.text);
    auto vocab = model::build_vocab(texts, train_cfg.vocab_min_freq, train_cfg.vocab_max_size);

    schedule::PlanDataset ds;
    ds.dataset_id = train_records.front().dataset_id;
    ds.domain_tag = train_records.front().domain_tag;
    ds.task = train_records.front().task;
    ds.records = carved.train;
    auto plan =
        schedule::build_shuffled({std::move(ds)}, util::derive_seed(fold_seed, "cv.plan"), true);

    auto cfg = train_cfg;
    cfg.seed = fold_seed;
    auto params = train::make_model(model_cfg, vocab.size(), {{task, n_classes}},
                                    util::derive_seed(fold_seed, "cv.init"));
    auto trained =
        train::train(std::move(params), plan, {{task, carved.val}}, vocab, cfg, "crossval");

    const std::size_t max_len = static_cast<std::size_t>(model_cfg.max_len);
    std::vector<int> pred;
    pred.reserve(test_records.size());
    for (std::size_t start = 0; start < test_records.size(); start += cfg.batch_size) {
      std::size_t stop = std::min(test_records.size(), start + cfg.batch_size);
      std::vector<HarmonizedRecord> chunk(
          test_records.begin() + static_cast<std::ptrdiff_t>(start),
          test_records.begin() + static_cast<std::ptrdiff_t>(stop));
      auto batch = schedule::make_batch(chunk, max_len, vocab);
      auto p = model::predict(trained.params, batch, task);
      pred.insert(pred.end(), p.begin(), p.end());
    }
    return pred;
  };
}

}  // namespace citekit::eval
