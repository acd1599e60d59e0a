#ifndef CITEKIT_CLI_RUN_MANIFEST_HPP
#define CITEKIT_CLI_RUN_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "citekit/corpus/manifest.hpp"
#include "citekit/model/config.hpp"
#include "citekit/schedule/schedule.hpp"
#include "citekit/train/trainer.hpp"

namespace citekit::cli {

enum class RunTask { Sentiment, Intent, MultiTask };

struct ScheduleBlock {
  schedule::PlanKind kind = schedule::PlanKind::Shuffled;
  std::string category_order;  // e.g. "STPM"; sequential only
  std::string sampling = "none";
  std::optional<std::uint64_t> seed;  // defaults to a derivation of the run seed
  bool epoch_reshuffle = true;
  schedule::MixPolicy mix_policy = schedule::MixPolicy::Proportional;
};

struct CrossValBlock {
  std::size_t k = 10;
  bool stratified = true;
  double val_fraction = 0.1;
};

// The self-describing experiment configuration; a copy placed in the run
// directory is sufficient to re-execute the run.
struct RunManifest {
  std::string name;
  RunTask task = RunTask::Sentiment;
  int sentiment_classes = 2;
  std::vector<corpus::DatasetManifest> datasets;
  std::vector<corpus::DatasetManifest> intent_datasets;  // multitask
  ScheduleBlock schedule;
  model::EncoderConfig encoder;
  std::map<std::string, model::LossSpec> loss_per_task;
  train::TrainConfig training;
  CrossValBlock crossval;
  std::uint64_t seed = 42;
  std::filesystem::path output_dir;
  std::size_t jobs = 1;
  std::string validation = "union";  // or one dataset id
  std::optional<std::filesystem::path> checkpoint;  // finetune source
  std::optional<std::string> target_dataset;        // finetune target id

  int classes_for(corpus::Task t) const {
    return t == corpus::Task::Sentiment ? sentiment_classes : 3;
  }
};

RunManifest load_run_manifest(const std::filesystem::path& path);
RunManifest parse_run_manifest_json(const std::string& json_text,
                                    const std::filesystem::path& base_dir);

}  // namespace citekit::cli

#endif
