#ifndef CITEKIT_TRAIN_TRAINER_HPP
#define CITEKIT_TRAIN_TRAINER_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "citekit/corpus/types.hpp"
#include "citekit/eval/metrics.hpp"
#include "citekit/model/checkpoint.hpp"
#include "citekit/model/config.hpp"
#include "citekit/model/network.hpp"
#include "citekit/model/optimizer.hpp"
#include "citekit/schedule/schedule.hpp"

namespace citekit::train {

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 24;
  std::size_t patience = 5;
  double min_delta = 1e-4;
  std::uint64_t seed = 0;
  std::map<std::string, model::LossSpec> loss_per_task;  // absent task -> plain CE
  model::OptHyper optimizer;
  std::size_t vocab_min_freq = 1;
  std::size_t vocab_max_size = 50000;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::map<std::string, double> val_macro_f1;
  std::map<std::string, double> val_micro_f1;
  std::map<std::string, double> val_accuracy;
  double wall_seconds = 0.0;  // kept out of the deterministic CSV
};

struct TrainLog {
  std::string phase = "train";
  std::vector<EpochLog> epochs;
  bool stopped_early = false;
  std::size_t best_epoch = 0;
  double best_score = 0.0;
};

// epoch,train_loss,val_macro_f1_<task>,... — byte-stable across reruns
std::string train_log_csv(const TrainLog& log);

using ValSets = std::map<std::string, std::vector<corpus::HarmonizedRecord>>;

struct TrainResult {
  model::ModelParams params;
  TrainLog log;
  std::optional<model::OptState> opt;  // moments as of the last epoch run
};

// Fresh encoder + one head per entry of `heads` (task tag -> class count).
model::ModelParams make_model(const model::EncoderConfig& config, int vocab_size,
                              const std::map<std::string, int>& heads, std::uint64_t seed);

// Epoch loop over the plan with per-task validation macro-F1 (averaged across
// tasks for multi-task plans), early stopping, and best-epoch restoration.
// A non-finite loss aborts with a diagnostic. epochs == 0 is a no-op pass-through
// (the fine-tuning contract).
TrainResult train(model::ModelParams params, const schedule::SchedulePlan& plan,
                  const ValSets& val_sets, const model::Vocab& vocab, const TrainConfig& cfg,
                  const std::string& phase = "train");

// Continues a checkpoint on the target dataset only, with fresh optimizer
// moments. The target labels must fit the checkpointed head.
TrainResult fine_tune(const model::Checkpoint& checkpoint,
                      const std::vector<corpus::HarmonizedRecord>& target_train,
                      const ValSets& val_sets, const TrainConfig& cfg);

// train() over a multi-task plan; requires both heads registered.
TrainResult train_multitask(model::ModelParams params, const schedule::SchedulePlan& plan,
                            const ValSets& val_sets, const model::Vocab& vocab,
                            const TrainConfig& cfg);

// Batched argmax evaluation of one record set against its task head.
eval::EvalReport evaluate_records(const model::ModelParams& params, const model::Vocab& vocab,
                                  const std::vector<corpus::HarmonizedRecord>& records,
                                  std::size_t batch_size, const std::string& train_id = "",
                                  const std::string& test_id = "");

}  // namespace citekit::train

#endif
