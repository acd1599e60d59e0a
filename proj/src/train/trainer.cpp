#include "citekit/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "citekit/train/early_stop.hpp"
#include "citekit/util/error.hpp"
#include "citekit/util/rng.hpp"
#include "citekit/util/text.hpp"

namespace citekit::train {

namespace {

using corpus::HarmonizedRecord;
using corpus::Task;

model::LossSpec loss_for_task(const TrainConfig& cfg, const std::string& task) {
  auto it = cfg.loss_per_task.find(task);
  return it == cfg.loss_per_task.end() ? model::LossSpec{} : it->second;
}

}  // namespace

std::string train_log_csv(const TrainLog& log) {
  // column order is fixed by the (sorted) task keys of the first epoch
  std::vector<std::string> tasks;
  if (!log.epochs.empty())
    for (const auto& [task, v] : log.epochs.front().val_macro_f1) tasks.push_back(task);
  std::string out = "epoch,phase,train_loss";
  for (const auto& t : tasks)
    out += ",val_macro_f1_" + t + ",val_micro_f1_" + t + ",val_accuracy_" + t;
  out += "\n";
  for (const auto& e : log.epochs) {
    out += std::to_string(e.epoch) + "," + log.phase + "," + util::format_full(e.train_loss);
    for (const auto& t : tasks)
      out += "," + util::format_full(e.val_macro_f1.at(t)) + "," +
             util::format_full(e.val_micro_f1.at(t)) + "," +
             util::format_full(e.val_accuracy.at(t));
    out += "\n";
  }
  return out;
}

model::ModelParams make_model(const model::EncoderConfig& config, int vocab_size,
                              const std::map<std::string, int>& heads, std::uint64_t seed) {
  auto params = model::init_params(config, vocab_size, seed);
  for (const auto& [task, classes] : heads) model::register_head(params, task, classes, seed);
  return params;
}

eval::EvalReport evaluate_records(const model::ModelParams& params, const model::Vocab& vocab,
                                  const std::vector<HarmonizedRecord>& records,
                                  std::size_t batch_size, const std::string& train_id,
                                  const std::string& test_id) {
  if (records.empty()) throw ValidationError("evaluate_records: empty record set");
  const std::string task = corpus::task_name(records.front().task);
  auto head = params.heads.find(task);
  if (head == params.heads.end())
    throw ValidationError("evaluate_records: no head for task '" + task + "'");

  std::vector<int> gold, pred;
  gold.reserve(records.size());
  pred.reserve(records.size());
  const std::size_t max_len = static_cast<std::size_t>(params.config.max_len);
  for (std::size_t start = 0; start < records.size(); start += batch_size) {
    std::size_t stop = std::min(records.size(), start + batch_size);
    std::vector<HarmonizedRecord> chunk(records.begin() + static_cast<std::ptrdiff_t>(start),
                                        records.begin() + static_cast<std::ptrdiff_t>(stop));
    auto batch = schedule::make_batch(chunk, max_len, vocab);
    auto batch_pred = model::predict(params, batch, task);
    pred.insert(pred.end(), batch_pred.begin(), batch_pred.end());
    gold.insert(gold.end(), batch.labels.begin(), batch.labels.end());
  }
  return eval::evaluate(gold, pred, head->second, train_id, test_id);
}

TrainResult train(model::ModelParams params, const schedule::SchedulePlan& plan,
                  const ValSets& val_sets, const model::Vocab& vocab, const TrainConfig& cfg,
                  const std::string& phase) {
  if (plan.total_samples() == 0) throw ValidationError("train: empty plan");
  for (Task t : plan.tasks()) {
    const std::string task = corpus::task_name(t);
    if (!params.heads.count(task))
      throw ValidationError("train: plan schedules task '" + task + "' with no registered head");
    if (!val_sets.count(task) || val_sets.at(task).empty())
      throw ValidationError("train: no validation set for task '" + task + "'");
    loss_for_task(cfg, task).validate(params.heads.at(task));
  }

  TrainResult result{std::move(params), {}};
  result.log.phase = phase;
  if (cfg.epochs == 0) return result;  // fine-tuning with no additional epochs

  auto opt = model::make_opt_state(result.params, cfg.optimizer);
  EarlyStopper stopper(cfg.patience, cfg.min_delta);
  std::map<std::string, model::Matrix> best_tensors = result.params.tensors;
  const std::size_t max_len = static_cast<std::size_t>(result.params.config.max_len);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    schedule::BatchIterator batches(plan, epoch - 1, cfg.batch_size, max_len, vocab);
    double loss_sum = 0.0;
    std::size_t sample_count = 0, batch_index = 0;
    schedule::Batch batch;
    while (batches.next(batch)) {
      const std::string task = corpus::task_name(batch.task);
      auto bw = model::backward(result.params, batch, task, loss_for_task(cfg, task));
      if (!std::isfinite(bw.loss_value))
        throw RuntimeFailure("train: loss is not finite at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batch_index) +
                             " (diverged; lower the learning rate)");
      model::opt_step(result.params, bw.grads, opt);
      loss_sum += bw.loss_value * static_cast<double>(batch.size());
      sample_count += static_cast<std::size_t>(batch.size());
      ++batch_index;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = sample_count == 0 ? 0.0 : loss_sum / static_cast<double>(sample_count);
    double score_sum = 0.0;
    std::size_t score_count = 0;
    for (Task t : plan.tasks()) {
      const std::string task = corpus::task_name(t);
      auto report = evaluate_records(result.params, vocab, val_sets.at(task), cfg.batch_size);
      entry.val_macro_f1[task] = report.macro_f1;
      entry.val_micro_f1[task] = report.micro_f1;
      entry.val_accuracy[task] = report.accuracy;
      score_sum += report.macro_f1;
      ++score_count;
    }
    entry.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.epochs.push_back(entry);

    const double score = score_sum / static_cast<double>(score_count);
    if (stopper.observe(score)) best_tensors = result.params.tensors;
    if (stopper.should_stop()) {
      result.log.stopped_early = true;
      break;
    }
  }

  result.params.tensors = std::move(best_tensors);  // best-epoch restoration
  result.log.best_epoch = stopper.best_epoch();
  result.log.best_score = stopper.best_score();
  result.opt = std::move(opt);
  return result;
}

TrainResult fine_tune(const model::Checkpoint& checkpoint,
                      const std::vector<HarmonizedRecord>& target_train, const ValSets& val_sets,
                      const TrainConfig& cfg) {
  if (target_train.empty()) throw ValidationError("fine_tune: empty target dataset");
  const Task task = target_train.front().task;
  const std::string task_tag = corpus::task_name(task);
  auto head = checkpoint.params.heads.find(task_tag);
  if (head == checkpoint.params.heads.end())
    throw ValidationError("fine_tune: checkpoint has no head for task '" + task_tag + "'");
  for (const auto& r : target_train)
    if (corpus::label_class_index(r.label) >= head->second)
      throw ValidationError("fine_tune: label '" + corpus::label_name(r.label) +
                            "' does not fit the checkpointed " + std::to_string(head->second) +
                            "-class head");

  schedule::PlanDataset ds;
  ds.dataset_id = target_train.front().dataset_id;
  ds.domain_tag = target_train.front().domain_tag;
  ds.task = task;
  ds.records = target_train;
  auto plan = schedule::build_shuffled({std::move(ds)},
                                       util::derive_seed(cfg.seed, "finetune.plan"), true);
  // fresh moments, checkpointed weights
  return train(checkpoint.params, plan, val_sets, checkpoint.vocab, cfg, "finetune");
}

TrainResult train_multitask(model::ModelParams params, const schedule::SchedulePlan& plan,
                            const ValSets& val_sets, const model::Vocab& vocab,
                            const TrainConfig& cfg) {
  if (plan.kind != schedule::PlanKind::MultiTask)
    throw ValidationError("train_multitask: plan was not built by build_multitask");
  return train(std::move(params), plan, val_sets, vocab, cfg, "multitask");
}

}  // namespace citekit::train
