#include "citekit/cli/run_manifest.hpp"

#include <set>

#include <json.hpp>

#include "citekit/util/error.hpp"
#include "citekit/util/io.hpp"
#include "citekit/util/text.hpp"

namespace citekit::cli {

namespace {

using nlohmann::json;

corpus::DatasetManifest dataset_entry(const json& entry, const std::filesystem::path& base_dir) {
  if (entry.is_string()) {
    std::filesystem::path p = entry.get<std::string>();
    if (!p.is_absolute()) p = base_dir / p;
    return corpus::load_manifest(p);
  }
  if (entry.is_object()) return corpus::parse_manifest_json(entry.dump(), base_dir);
  throw ValidationError("dataset entry must be a manifest path or an inline manifest object");
}

schedule::PlanKind plan_kind_from_string(const std::string& s) {
  auto v = util::to_lower_ascii(util::trim(s));
  if (v == "sequential") return schedule::PlanKind::Sequential;
  if (v == "shuffled") return schedule::PlanKind::Shuffled;
  if (v == "multitask" || v == "multi-task") return schedule::PlanKind::MultiTask;
  throw ValidationError("unknown schedule kind '" + s + "'");
}

schedule::MixPolicy mix_policy_from_string(const std::string& s) {
  auto v = util::to_lower_ascii(util::trim(s));
  if (v == "proportional") return schedule::MixPolicy::Proportional;
  if (v == "alternating") return schedule::MixPolicy::Alternating;
  throw ValidationError("unknown mix policy '" + s + "'");
}

}  // namespace

RunManifest parse_run_manifest_json(const std::string& json_text,
                                    const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run manifest is not valid JSON: ") + e.what());
  }

  RunManifest m;
  try {
    auto task = util::to_lower_ascii(j.value("task", "sentiment"));
    if (task == "sentiment")
      m.task = RunTask::Sentiment;
    else if (task == "intent")
      m.task = RunTask::Intent;
    else if (task == "multitask" || task == "multi-task")
      m.task = RunTask::MultiTask;
    else
      throw ValidationError("unknown run task '" + task + "'");

    m.sentiment_classes = j.value("sentiment_classes", m.task == RunTask::MultiTask ? 3 : 2);
    if (m.sentiment_classes != 2 && m.sentiment_classes != 3)
      throw ValidationError("sentiment_classes must be 2 or 3");

    if (j.contains("datasets"))
      for (const auto& entry : j.at("datasets")) m.datasets.push_back(dataset_entry(entry, base_dir));
    if (j.contains("intent_datasets"))
      for (const auto& entry : j.at("intent_datasets"))
        m.intent_datasets.push_back(dataset_entry(entry, base_dir));

    std::set<std::string> ids;
    for (const auto& d : m.datasets)
      if (!ids.insert(d.dataset_id).second)
        throw ValidationError("duplicate dataset id '" + d.dataset_id + "'");
    for (const auto& d : m.intent_datasets)
      if (!ids.insert(d.dataset_id).second)
        throw ValidationError("duplicate dataset id '" + d.dataset_id + "'");

    if (j.contains("schedule")) {
      const json& s = j.at("schedule");
      if (s.contains("kind")) m.schedule.kind = plan_kind_from_string(s.at("kind").get<std::string>());
      m.schedule.category_order = s.value("category_order", "");
      m.schedule.sampling = s.value("sampling", "none");
      if (s.contains("seed")) m.schedule.seed = s.at("seed").get<std::uint64_t>();
      m.schedule.epoch_reshuffle = s.value("epoch_reshuffle", true);
      if (s.contains("mix_policy"))
        m.schedule.mix_policy = mix_policy_from_string(s.at("mix_policy").get<std::string>());
      // the schedule block may carry batch_size/epochs; the training block wins
      if (s.contains("batch_size")) m.training.batch_size = s.at("batch_size").get<std::size_t>();
      if (s.contains("epochs")) m.training.epochs = s.at("epochs").get<std::size_t>();
    }

    if (j.contains("model")) {
      const json& mod = j.at("model");
      if (mod.contains("encoder"))
        m.encoder = model::EncoderConfig::from_json(mod.at("encoder").dump());
      if (mod.contains("loss"))
        m.loss_per_task["sentiment"] = model::LossSpec::from_json(mod.at("loss").dump());
      if (mod.contains("intent_loss"))
        m.loss_per_task["intent"] = model::LossSpec::from_json(mod.at("intent_loss").dump());
      else if (mod.contains("loss") && m.task == RunTask::Intent)
        m.loss_per_task["intent"] = model::LossSpec::from_json(mod.at("loss").dump());
      if (mod.contains("vocab")) {
        m.training.vocab_min_freq = mod.at("vocab").value("min_freq", std::size_t{1});
        m.training.vocab_max_size = mod.at("vocab").value("max_size", std::size_t{50000});
      }
    }

    if (j.contains("training")) {
      const json& t = j.at("training");
      m.training.epochs = t.value("epochs", m.training.epochs);
      m.training.batch_size = t.value("batch_size", m.training.batch_size);
      m.training.patience = t.value("patience", m.training.patience);
      m.training.min_delta = t.value("min_delta", m.training.min_delta);
      m.training.optimizer.learning_rate =
          t.value("learning_rate", m.training.optimizer.learning_rate);
      m.training.optimizer.beta1 = t.value("beta1", m.training.optimizer.beta1);
      m.training.optimizer.beta2 = t.value("beta2", m.training.optimizer.beta2);
      m.training.optimizer.epsilon = t.value("epsilon", m.training.optimizer.epsilon);
      m.validation = t.value("validation", m.validation);
    }
    if (m.training.batch_size < 1) throw ValidationError("batch_size must be at least 1");

    if (j.contains("crossval")) {
      const json& c = j.at("crossval");
      m.crossval.k = c.value("k", m.crossval.k);
      m.crossval.stratified = c.value("stratified", m.crossval.stratified);
      m.crossval.val_fraction = c.value("val_fraction", m.crossval.val_fraction);
    }

    m.seed = j.value("seed", m.seed);
    m.training.seed = m.seed;
    m.name = j.value("name", "");
    if (j.contains("output_dir")) {
      std::filesystem::path out = j.at("output_dir").get<std::string>();
      m.output_dir = out;
    }
    m.jobs = j.value("jobs", std::size_t{1});
    if (j.contains("checkpoint")) {
      std::filesystem::path p = j.at("checkpoint").get<std::string>();
      m.checkpoint = p.is_absolute() ? p : base_dir / p;
    }
    if (j.contains("target_dataset")) m.target_dataset = j.at("target_dataset").get<std::string>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("run manifest field error: ") + e.what());
  }
  return m;
}

RunManifest load_run_manifest(const std::filesystem::path& path) {
  auto text = util::read_file(path);
  auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  auto m = parse_run_manifest_json(text, base);
  if (m.name.empty()) m.name = path.stem().string();
  return m;
}

}  // namespace citekit::cli
