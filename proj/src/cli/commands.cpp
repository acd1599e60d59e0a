#include "citekit/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "citekit/cli/reports.hpp"
#include "citekit/cli/run_manifest.hpp"
#include "citekit/corpus/corpus.hpp"
#include "citekit/eval/crossval.hpp"
#include "citekit/eval/matrix.hpp"
#include "citekit/model/checkpoint.hpp"
#include "citekit/util/csv.hpp"
#include "citekit/util/error.hpp"
#include "citekit/util/io.hpp"
#include "citekit/util/rng.hpp"
#include "citekit/util/text.hpp"

namespace citekit::cli {

namespace {

using corpus::HarmonizedRecord;
using corpus::PreparedDataset;
using corpus::Task;
using nlohmann::json;

// ---------- shared plumbing ----------

std::string plan_kind_name(schedule::PlanKind kind) {
  switch (kind) {
    case schedule::PlanKind::Sequential: return "sequential";
    case schedule::PlanKind::Shuffled: return "shuffled";
    case schedule::PlanKind::MultiTask: return "multitask";
  }
  return "?";
}

std::filesystem::path resolve_output_dir(const RunManifest& m, const Overrides& ov) {
  std::filesystem::path out = ov.out ? std::filesystem::path(*ov.out) : m.output_dir;
  if (out.empty()) throw ValidationError("no output directory (set output_dir or pass --out)");
  if (out.is_relative()) {
    if (const char* root = std::getenv("CITEKIT_OUT_ROOT")) out = std::filesystem::path(root) / out;
  }
  return out;
}

RunManifest load_with_overrides(const std::string& path, const Overrides& ov) {
  auto m = load_run_manifest(path);
  if (ov.seed) {
    m.seed = *ov.seed;
    m.training.seed = *ov.seed;
  }
  if (ov.jobs) m.jobs = *ov.jobs;
  return m;
}

struct Pipeline {
  std::vector<PreparedDataset> datasets;         // run task side
  std::vector<PreparedDataset> intent_datasets;  // multitask only
};

Pipeline load_pipeline(const RunManifest& m) {
  if (m.datasets.empty()) throw ValidationError("run manifest lists no datasets");
  const bool binary = m.sentiment_classes == 2;
  Pipeline p;
  for (const auto& dm : m.datasets) {
    if (m.task == RunTask::Intent && dm.task != Task::Intent)
      throw ValidationError("intent run lists non-intent dataset '" + dm.dataset_id + "'");
    if (m.task != RunTask::Intent && dm.task != Task::Sentiment)
      throw ValidationError("sentiment run lists non-sentiment dataset '" + dm.dataset_id + "'");
    p.datasets.push_back(corpus::prepare_dataset(
        dm, binary, util::derive_seed(m.seed, "corpus." + dm.dataset_id)));
  }
  if (m.task == RunTask::MultiTask) {
    if (m.intent_datasets.empty())
      throw ValidationError("multitask run needs at least one intent dataset");
    for (const auto& dm : m.intent_datasets) {
      if (dm.task != Task::Intent)
        throw ValidationError("intent_datasets entry '" + dm.dataset_id + "' is not intent");
      p.intent_datasets.push_back(corpus::prepare_dataset(
          dm, false, util::derive_seed(m.seed, "corpus." + dm.dataset_id)));
    }
  }
  return p;
}

schedule::PlanDataset to_plan_dataset(const PreparedDataset& prepared,
                                      std::vector<HarmonizedRecord> records) {
  schedule::PlanDataset ds;
  ds.dataset_id = prepared.manifest.dataset_id;
  ds.domain_tag = prepared.manifest.domain_tag;
  ds.task = prepared.manifest.task;
  ds.records = std::move(records);
  return ds;
}

// Resample each dataset's train split to the common size.
std::vector<schedule::PlanDataset> resampled_plan_datasets(
    const std::vector<PreparedDataset>& prepared, const ScheduleBlock& block,
    std::uint64_t schedule_seed) {
  std::size_t smallest = SIZE_MAX;
  for (const auto& d : prepared) smallest = std::min(smallest, d.splits.train.size());
  std::vector<schedule::PlanDataset> out;
  for (const auto& d : prepared) {
    auto spec = schedule::SamplingSpec::parse(
        block.sampling, util::derive_seed(schedule_seed, "sample." + d.manifest.dataset_id));
    out.push_back(to_plan_dataset(d, schedule::resample(d.splits.train, spec, smallest)));
  }
  return out;
}

schedule::SchedulePlan build_plan(const RunManifest& m, const Pipeline& pipeline) {
  const std::uint64_t schedule_seed =
      m.schedule.seed ? *m.schedule.seed : util::derive_seed(m.seed, "schedule");
  auto datasets = resampled_plan_datasets(pipeline.datasets, m.schedule, schedule_seed);

  switch (m.schedule.kind) {
    case schedule::PlanKind::Sequential: {
      if (m.schedule.category_order.empty())
        throw ValidationError("sequential schedule needs a category_order (e.g. \"STPM\")");
      std::vector<std::pair<std::string, corpus::Domain>> listing;
      for (const auto& d : datasets) listing.emplace_back(d.dataset_id, d.domain_tag);
      auto order = schedule::CategoryOrder::from_code(m.schedule.category_order, listing);
      return schedule::build_sequential(std::move(datasets), order, schedule_seed,
                                        m.schedule.epoch_reshuffle);
    }
    case schedule::PlanKind::Shuffled:
      return schedule::build_shuffled(std::move(datasets), schedule_seed,
                                      m.schedule.epoch_reshuffle);
    case schedule::PlanKind::MultiTask: {
      if (m.task != RunTask::MultiTask)
        throw ValidationError("multitask schedule requires task = multitask");
      std::vector<schedule::PlanDataset> intent;
      for (const auto& d : pipeline.intent_datasets)
        intent.push_back(to_plan_dataset(d, d.splits.train));
      return schedule::build_multitask(std::move(datasets), std::move(intent),
                                       m.schedule.mix_policy, schedule_seed,
                                       m.schedule.epoch_reshuffle);
    }
  }
  throw ValidationError("unknown schedule kind");
}

train::ValSets build_val_sets(const RunManifest& m, const Pipeline& pipeline,
                              const schedule::SchedulePlan& plan) {
  train::ValSets val;
  auto add = [&](const std::vector<PreparedDataset>& group, Task task) {
    const std::string tag = corpus::task_name(task);
    for (const auto& d : group) {
      if (m.validation != "union" && m.validation != d.manifest.dataset_id) continue;
      auto& dst = val[tag];
      dst.insert(dst.end(), d.splits.val.begin(), d.splits.val.end());
    }
  };
  for (Task t : plan.tasks()) {
    if (t == Task::Intent && m.task == RunTask::MultiTask)
      add(pipeline.intent_datasets, t);
    else
      add(pipeline.datasets, t);
  }
  for (Task t : plan.tasks()) {
    const std::string tag = corpus::task_name(t);
    if (!val.count(tag) || val.at(tag).empty())
      throw ValidationError("no validation records for task '" + tag +
                            "' (check the validation setting and val splits)");
  }
  return val;
}

model::Vocab build_run_vocab(const RunManifest& m, const schedule::SchedulePlan& plan) {
  std::vector<std::string> texts;
  texts.reserve(plan.total_samples());
  for (const auto& d : plan.datasets)
    for (const auto& r : d.records) texts.push_back(r.text);
  return model::build_vocab(texts, m.training.vocab_min_freq, m.training.vocab_max_size);
}

// Fill auto class weights (weighted loss with no explicit weights) from the
// scheduled training data.
train::TrainConfig finalize_training_config(const RunManifest& m,
                                            const schedule::SchedulePlan& plan) {
  auto cfg = m.training;
  cfg.loss_per_task = m.loss_per_task;
  for (Task t : plan.tasks()) {
    const std::string tag = corpus::task_name(t);
    auto it = cfg.loss_per_task.find(tag);
    if (it == cfg.loss_per_task.end()) continue;
    if (it->second.kind != model::LossKind::WeightedCrossEntropy ||
        !it->second.class_weights.empty())
      continue;
    std::vector<std::size_t> counts(static_cast<std::size_t>(m.classes_for(t)), 0);
    for (const auto& d : plan.datasets) {
      if (d.task != t) continue;
      for (const auto& r : d.records)
        counts[static_cast<std::size_t>(corpus::label_class_index(r.label))]++;
    }
    it->second.class_weights = model::class_weights(counts);
  }
  return cfg;
}

// manifest.json is the input verbatim; manifest_resolved.json additionally
// inlines dataset manifests with absolute file paths, so the run directory
// re-executes no matter where it is moved.
void write_manifest_copy(const std::filesystem::path& manifest_path,
                         const std::filesystem::path& run_dir) {
  auto text = util::read_file(manifest_path);
  util::write_file(run_dir / "manifest.json", text);

  auto base_dir = manifest_path.has_parent_path() ? manifest_path.parent_path()
                                                  : std::filesystem::path(".");
  json j = json::parse(text);
  auto resolve_list = [&](json& list) {
    for (auto& entry : list) {
      json inline_manifest;
      std::filesystem::path entry_base = base_dir;
      if (entry.is_string()) {
        std::filesystem::path p = entry.get<std::string>();
        if (!p.is_absolute()) p = base_dir / p;
        inline_manifest = json::parse(util::read_file(p));
        entry_base = p.parent_path();
      } else {
        inline_manifest = entry;
      }
      std::filesystem::path fp = inline_manifest.at("file_path").get<std::string>();
      if (!fp.is_absolute()) fp = entry_base / fp;
      inline_manifest["file_path"] = std::filesystem::absolute(fp).lexically_normal().string();
      entry = inline_manifest;
    }
  };
  if (j.contains("datasets")) resolve_list(j.at("datasets"));
  if (j.contains("intent_datasets")) resolve_list(j.at("intent_datasets"));
  if (j.contains("checkpoint")) {
    std::filesystem::path p = j.at("checkpoint").get<std::string>();
    if (!p.is_absolute()) p = base_dir / p;
    j["checkpoint"] = std::filesystem::absolute(p).lexically_normal().string();
  }
  util::write_file(run_dir / "manifest_resolved.json", j.dump(2) + "\n");
}

json stats_json(const PreparedDataset& d) {
  json classes = json::object();
  for (const auto& c : d.statistics.classes)
    classes[c.class_name] = {{"count", c.count}, {"percent", c.percent}};
  return {{"dataset", d.manifest.dataset_id},
          {"domain", corpus::domain_name(d.manifest.domain_tag)},
          {"train", d.statistics.train},
          {"val", d.statistics.val},
          {"test", d.statistics.test},
          {"classes", classes}};
}

std::string stats_markdown(const std::vector<PreparedDataset>& datasets) {
  std::set<std::string> class_names;
  for (const auto& d : datasets)
    for (const auto& c : d.statistics.classes) class_names.insert(c.class_name);
  std::string out = "| Domain | Dataset | Train | Val | Test |";
  for (const auto& c : class_names) out += " " + c + " [%] |";
  out += "\n|---|---|---|---|---|";
  for (std::size_t i = 0; i < class_names.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& d : datasets) {
    out += "| " + corpus::domain_name(d.manifest.domain_tag) + " | " + d.manifest.dataset_id +
           " | " + std::to_string(d.statistics.train) + " | " +
           std::to_string(d.statistics.val) + " | " + std::to_string(d.statistics.test) + " |";
    for (const auto& cn : class_names) {
      auto it = std::find_if(d.statistics.classes.begin(), d.statistics.classes.end(),
                             [&](const auto& c) { return c.class_name == cn; });
      out += it == d.statistics.classes.end()
                 ? " - |"
                 : " " + util::format_double(it->percent, 2) + " |";
    }
    out += "\n";
  }
  return out;
}

std::string stats_csv(const std::vector<PreparedDataset>& datasets) {
  std::set<std::string> class_names;
  for (const auto& d : datasets)
    for (const auto& c : d.statistics.classes) class_names.insert(c.class_name);
  std::vector<std::string> header{"domain", "dataset", "train", "val", "test"};
  for (const auto& c : class_names) header.push_back("percent_" + c);
  std::string out = util::csv_join(header);
  for (const auto& d : datasets) {
    std::vector<std::string> row{corpus::domain_name(d.manifest.domain_tag),
                                 d.manifest.dataset_id, std::to_string(d.statistics.train),
                                 std::to_string(d.statistics.val),
                                 std::to_string(d.statistics.test)};
    for (const auto& cn : class_names) {
      auto it = std::find_if(d.statistics.classes.begin(), d.statistics.classes.end(),
                             [&](const auto& c) { return c.class_name == cn; });
      row.push_back(it == d.statistics.classes.end() ? "" : util::format_full(it->percent));
    }
    out += util::csv_join(row);
  }
  return out;
}

// Per-dataset test evaluation plus union-of-task scores for the Table-8 block.
struct TestEvaluation {
  json per_dataset;          // test_macro_f1 / test_micro_f1 / test_accuracy / recalls
  json task_macro_f1;        // per task over the union of its test splits
};

TestEvaluation evaluate_on_tests(const model::ModelParams& params, const model::Vocab& vocab,
                                 const RunManifest& m, const Pipeline& pipeline) {
  TestEvaluation out;
  json macro = json::object(), micro = json::object(), acc = json::object(),
       recalls = json::object();
  std::map<std::string, std::vector<HarmonizedRecord>> union_per_task;

  auto eval_group = [&](const std::vector<PreparedDataset>& group) {
    for (const auto& d : group) {
      if (d.splits.test.empty())
        throw ValidationError("dataset '" + d.manifest.dataset_id + "' has no test split");
      auto report = train::evaluate_records(params, vocab, d.splits.test, m.training.batch_size,
                                            m.name, d.manifest.dataset_id);
      macro[d.manifest.dataset_id] = report.macro_f1;
      micro[d.manifest.dataset_id] = report.micro_f1;
      acc[d.manifest.dataset_id] = report.accuracy;
      json rec = json::array();
      for (const auto& r : report.per_class_accuracy)
        rec.push_back(r ? json(*r) : json(nullptr));
      recalls[d.manifest.dataset_id] = rec;
      auto& u = union_per_task[corpus::task_name(d.splits.test.front().task)];
      u.insert(u.end(), d.splits.test.begin(), d.splits.test.end());
    }
  };
  eval_group(pipeline.datasets);
  eval_group(pipeline.intent_datasets);

  out.per_dataset = {{"test_macro_f1", macro},
                     {"test_micro_f1", micro},
                     {"test_accuracy", acc},
                     {"test_per_class_recall", recalls}};
  json task_scores = json::object();
  for (const auto& [tag, records] : union_per_task) {
    if (!params.heads.count(tag)) continue;
    auto report = train::evaluate_records(params, vocab, records, m.training.batch_size);
    task_scores[tag] = report.macro_f1;
  }
  out.task_macro_f1 = task_scores;
  return out;
}

json log_best_epoch_metrics(const train::TrainLog& log) {
  json out = json::object();
  if (log.best_epoch == 0 || log.best_epoch > log.epochs.size()) return out;
  const auto& e = log.epochs[log.best_epoch - 1];
  for (const auto& [task, v] : e.val_macro_f1) out[task] = v;
  return out;
}

void write_meta(const std::filesystem::path& run_dir, double wall_seconds) {
  json meta = {{"wall_seconds", wall_seconds},
               {"created_unix", static_cast<std::int64_t>(
                                    std::chrono::duration_cast<std::chrono::seconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count())}};
  util::write_file(run_dir / "meta.json", meta.dump(2) + "\n");
}

int run_training_command(const std::string& command, const std::string& manifest_path,
                         const Overrides& ov) {
  const auto t0 = std::chrono::steady_clock::now();
  auto m = load_with_overrides(manifest_path, ov);
  if (command == "multitask" && m.task != RunTask::MultiTask)
    throw ValidationError("multitask command requires task = multitask in the manifest");
  if (command == "multitask") m.schedule.kind = schedule::PlanKind::MultiTask;
  auto out_dir = resolve_output_dir(m, ov);

  // Everything that can fail validation happens before the run directory is
  // created, so a broken manifest leaves no partial run behind.
  auto pipeline = load_pipeline(m);

  schedule::SchedulePlan plan;
  train::ValSets val_sets;
  auto cfg = m.training;
  model::Vocab vocab;
  model::ModelParams params;
  std::optional<model::Checkpoint> source;
  std::vector<HarmonizedRecord> finetune_train;

  if (command == "finetune") {
    if (!m.checkpoint) throw ValidationError("finetune needs a 'checkpoint' path");
    if (!m.target_dataset) throw ValidationError("finetune needs a 'target_dataset' id");
    source = model::load_checkpoint(*m.checkpoint);
    vocab = source->vocab;
    auto it = std::find_if(pipeline.datasets.begin(), pipeline.datasets.end(), [&](const auto& d) {
      return d.manifest.dataset_id == *m.target_dataset;
    });
    if (it == pipeline.datasets.end())
      throw ValidationError("target_dataset '" + *m.target_dataset +
                            "' is not among the listed datasets");
    finetune_train = it->splits.train;
    const std::string tag = corpus::task_name(it->manifest.task);
    val_sets = {{tag, it->splits.val}};
    if (val_sets.begin()->second.empty())
      throw ValidationError("target dataset has no validation records");
    cfg.loss_per_task = m.loss_per_task;
    auto loss_it = cfg.loss_per_task.find(tag);
    if (loss_it != cfg.loss_per_task.end() &&
        loss_it->second.kind == model::LossKind::WeightedCrossEntropy &&
        loss_it->second.class_weights.empty()) {
      std::vector<std::size_t> counts(
          static_cast<std::size_t>(m.classes_for(it->manifest.task)), 0);
      for (const auto& r : finetune_train)
        counts[static_cast<std::size_t>(corpus::label_class_index(r.label))]++;
      loss_it->second.class_weights = model::class_weights(counts);
    }
  } else {
    plan = build_plan(m, pipeline);
    val_sets = build_val_sets(m, pipeline, plan);
    cfg = finalize_training_config(m, plan);
    vocab = build_run_vocab(m, plan);
    std::map<std::string, int> heads;
    for (Task t : plan.tasks()) heads[corpus::task_name(t)] = m.classes_for(t);
    params = train::make_model(m.encoder, vocab.size(), heads,
                               util::derive_seed(m.seed, "model.init"));
  }

  std::filesystem::create_directories(out_dir);
  write_manifest_copy(manifest_path, out_dir);

  json summary;
  summary["command"] = command;
  summary["name"] = m.name;
  summary["seed"] = m.seed;
  summary["schedule"] = {
      {"kind", command == "finetune" ? "shuffled" : plan_kind_name(m.schedule.kind)},
      {"category_order", m.schedule.category_order},
      {"sampling", m.schedule.sampling}};
  summary["encoder"] = json::parse(m.encoder.to_json());
  json ds_list = json::array();
  for (const auto& d : pipeline.datasets) ds_list.push_back(d.manifest.dataset_id);
  for (const auto& d : pipeline.intent_datasets) ds_list.push_back(d.manifest.dataset_id);
  summary["datasets"] = ds_list;

  try {
    train::TrainResult result;
    if (command == "finetune") {
      result = train::fine_tune(*source, finetune_train, val_sets, cfg);
    } else if (command == "multitask") {
      result = train::train_multitask(std::move(params), plan, val_sets, vocab, cfg);
    } else {
      result = train::train(std::move(params), plan, val_sets, vocab, cfg);
    }

    std::string log_csv = train_log_csv(result.log);
    if (command == "finetune" && m.checkpoint->has_parent_path()) {
      // carry the source phase along so both phases read as one history
      auto source_log = m.checkpoint->parent_path() / "log.csv";
      if (std::filesystem::exists(source_log)) {
        auto prev = util::read_file(source_log);
        auto header_end = log_csv.find('\n');
        auto prev_header_end = prev.find('\n');
        if (prev_header_end != std::string::npos &&
            prev.substr(0, prev_header_end) == log_csv.substr(0, header_end))
          log_csv = prev + log_csv.substr(header_end + 1);
      }
    }
    util::write_file(out_dir / "log.csv", log_csv);

    model::Checkpoint ckpt;
    ckpt.params = result.params;
    ckpt.vocab = vocab;
    ckpt.opt = result.opt;
    ckpt.rng_state = util::Rng(m.seed).serialize();
    model::save_checkpoint(out_dir / "checkpoint.bin", ckpt);

    auto tests = evaluate_on_tests(result.params, vocab, m, pipeline);
    summary["status"] = "ok";
    summary["best_epoch"] = result.log.best_epoch;
    summary["stopped_early"] = result.log.stopped_early;
    summary["epochs_run"] = result.log.epochs.size();
    summary["best_val_macro_f1"] = result.log.best_score;
    summary["val_macro_f1"] = log_best_epoch_metrics(result.log);
    summary.update(tests.per_dataset);
    summary["task_macro_f1"] = tests.task_macro_f1;
    if (command == "finetune") summary["base_checkpoint"] = m.checkpoint->string();
    util::write_file(out_dir / "summary.json", summary.dump(2) + "\n");

    if (command == "multitask") {
      RunSummary rs;
      rs.name = m.name;
      rs.task_macro_f1 = tests.task_macro_f1.get<std::map<std::string, double>>();
      util::write_file(out_dir / "tasks.md", task_comparison_markdown({rs}));
    }
    write_meta(out_dir, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return 0;
  } catch (const RuntimeFailure& e) {
    summary["status"] = "failed";
    summary["error"] = e.what();
    util::write_file(out_dir / "summary.json", summary.dump(2) + "\n");
    write_meta(out_dir, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int cmd_clean(const std::string& dataset_manifest, const std::string& out_file) {
  auto manifest = corpus::load_manifest(dataset_manifest);
  auto raw = corpus::ingest(manifest);
  auto harmonized = corpus::harmonize(raw, manifest, false);

  // map harmonized positions back onto raw rows (harmonize preserves order)
  std::vector<std::size_t> raw_index;
  raw_index.reserve(harmonized.size());
  {
    std::size_t h = 0;
    for (std::size_t i = 0; i < raw.size() && h < harmonized.size(); ++i) {
      const auto& mapped = manifest.label_map.at(raw[i].raw_label);
      if (mapped.drop) continue;
      raw_index.push_back(i);
      ++h;
    }
  }
  auto [kept, report] = corpus::dedup_keep_indices(harmonized);

  std::filesystem::path out_path = out_file;
  std::string content;
  if (manifest.file_format == corpus::FileFormat::JsonLines) {
    for (auto k : kept) content += raw[raw_index[k]].source_line + "\n";
  } else {
    util::CsvDialect dialect{manifest.delimiter, manifest.quote};
    if (manifest.has_header) {
      auto rows = util::parse_csv(util::read_file(manifest.file_path), dialect);
      if (!rows.empty()) content += util::csv_join(rows.front(), dialect);
    }
    for (auto k : kept) content += util::csv_join(raw[raw_index[k]].source_fields, dialect);
  }
  util::write_file(out_path, content);

  auto stem = out_path;
  stem.replace_extension();
  util::write_file(stem.string() + "_audit.csv", corpus::cleaning_report_csv(report));
  util::write_file(stem.string() + "_audit.md", corpus::cleaning_report_markdown(report));

  std::cout << corpus::cleaning_report_markdown(report);
  std::cout << "removed " << report.total_removed << " of " << report.total_original << " ("
            << util::format_double(report.total_removed_percent, 2) << "%)\n";
  return 0;
}

int cmd_stats(const std::string& run_manifest, const Overrides& ov) {
  auto m = load_with_overrides(run_manifest, ov);
  auto pipeline = load_pipeline(m);
  std::vector<PreparedDataset> all = pipeline.datasets;
  all.insert(all.end(), pipeline.intent_datasets.begin(), pipeline.intent_datasets.end());
  auto md = stats_markdown(all);
  if (ov.out) {
    std::filesystem::path dir = *ov.out;
    util::write_file(dir / "stats.md", md);
    util::write_file(dir / "stats.csv", stats_csv(all));
  }
  std::cout << md;
  return 0;
}

int cmd_prepare(const std::string& run_manifest, const Overrides& ov) {
  auto m = load_with_overrides(run_manifest, ov);
  auto out_dir = resolve_output_dir(m, ov);
  auto pipeline = load_pipeline(m);
  auto plan = build_plan(m, pipeline);

  std::filesystem::create_directories(out_dir);
  write_manifest_copy(run_manifest, out_dir);
  std::vector<PreparedDataset> all = pipeline.datasets;
  all.insert(all.end(), pipeline.intent_datasets.begin(), pipeline.intent_datasets.end());
  util::write_file(out_dir / "stats.md", stats_markdown(all));
  util::write_file(out_dir / "stats.csv", stats_csv(all));
  for (const auto& d : all) {
    util::write_file(out_dir / (d.manifest.dataset_id + "_audit.csv"),
                     corpus::cleaning_report_csv(d.cleaning));
    util::write_file(out_dir / (d.manifest.dataset_id + "_audit.md"),
                     corpus::cleaning_report_markdown(d.cleaning));
  }

  json preview;
  preview["kind"] = plan_kind_name(m.schedule.kind);
  json order = json::array();
  for (const auto& d : plan.datasets)
    order.push_back({{"dataset", d.dataset_id},
                     {"domain", corpus::domain_name(d.domain_tag)},
                     {"task", corpus::task_name(d.task)},
                     {"samples", d.records.size()}});
  preview["feeding_order"] = order;
  if (!plan.category_boundaries.empty())
    preview["category_boundaries"] = plan.category_boundaries;
  preview["total_samples"] = plan.total_samples();
  preview["batches_per_epoch"] = plan.epoch_batches(0, m.training.batch_size).size();
  util::write_file(out_dir / "schedule_preview.json", preview.dump(2) + "\n");
  json stats_list = json::array();
  for (const auto& d : all) stats_list.push_back(stats_json(d));
  util::write_file(out_dir / "stats.json", stats_list.dump(2) + "\n");
  std::cout << "prepared " << all.size() << " datasets, " << plan.total_samples()
            << " scheduled samples\n";
  return 0;
}

int cmd_train(const std::string& run_manifest, const Overrides& ov) {
  return run_training_command("train", run_manifest, ov);
}

int cmd_finetune(const std::string& run_manifest, const Overrides& ov) {
  return run_training_command("finetune", run_manifest, ov);
}

int cmd_multitask(const std::string& run_manifest, const Overrides& ov) {
  return run_training_command("multitask", run_manifest, ov);
}

int cmd_matrix(const std::string& run_manifest, const Overrides& ov) {
  const auto t0 = std::chrono::steady_clock::now();
  auto m = load_with_overrides(run_manifest, ov);
  auto out_dir = resolve_output_dir(m, ov);
  if (m.datasets.size() < 2)
    throw ValidationError("matrix needs at least 2 datasets, got " +
                          std::to_string(m.datasets.size()));
  auto pipeline = load_pipeline(m);

  std::vector<eval::MatrixDataset> datasets;
  for (const auto& d : pipeline.datasets)
    datasets.push_back({d.manifest.dataset_id, d.splits});
  auto cfg = m.training;
  cfg.loss_per_task = m.loss_per_task;
  const Task matrix_task = pipeline.datasets.front().manifest.task;
  auto matrix = eval::cross_domain_matrix(datasets, m.encoder, cfg,
                                          m.classes_for(matrix_task), m.jobs);

  std::filesystem::create_directories(out_dir);
  write_manifest_copy(run_manifest, out_dir);
  util::write_file(out_dir / "matrix.csv", eval::matrix_csv(matrix));
  util::write_file(out_dir / "matrix.md", eval::matrix_markdown(matrix));

  std::size_t ok_cells = 0;
  json cells = json::object(), errors = json::object();
  for (std::size_t r = 0; r < matrix.dataset_ids.size(); ++r) {
    json row = json::object(), row_err = json::object();
    for (std::size_t c = 0; c < matrix.dataset_ids.size(); ++c) {
      const auto& cell = matrix.cells[r][c];
      if (cell.macro_f1) {
        row[matrix.dataset_ids[c]] = *cell.macro_f1;
        ++ok_cells;
      } else {
        row_err[matrix.dataset_ids[c]] = cell.error;
      }
    }
    cells[matrix.dataset_ids[r]] = row;
    if (!row_err.empty()) errors[matrix.dataset_ids[r]] = row_err;
  }
  json summary = {{"command", "matrix"}, {"name", m.name},
                  {"status", ok_cells > 0 ? "ok" : "failed"},
                  {"seed", m.seed},      {"cells_ok", ok_cells},
                  {"matrix", cells},     {"errors", errors}};
  util::write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  write_meta(out_dir, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  std::cout << eval::matrix_markdown(matrix);
  return ok_cells > 0 ? 0 : 2;
}

int cmd_crossval(const std::string& run_manifest, const Overrides& ov) {
  const auto t0 = std::chrono::steady_clock::now();
  auto m = load_with_overrides(run_manifest, ov);
  auto out_dir = resolve_output_dir(m, ov);
  if (m.datasets.size() != 1)
    throw ValidationError("crossval runs on exactly one dataset, got " +
                          std::to_string(m.datasets.size()));
  auto pipeline = load_pipeline(m);
  const auto& d = pipeline.datasets.front();

  // the protocol folds the whole cleaned corpus
  std::vector<HarmonizedRecord> records = d.splits.train;
  records.insert(records.end(), d.splits.val.begin(), d.splits.val.end());
  records.insert(records.end(), d.splits.test.begin(), d.splits.test.end());

  const int n_classes = m.classes_for(d.manifest.task);
  auto cfg = m.training;
  cfg.loss_per_task = m.loss_per_task;
  auto learner =
      eval::make_model_fold_learner(m.encoder, cfg, n_classes, m.crossval.val_fraction);
  auto result = eval::cross_validate(records, m.crossval.k, m.crossval.stratified,
                                     util::derive_seed(m.seed, "crossval"), n_classes, learner);

  std::filesystem::create_directories(out_dir);
  write_manifest_copy(run_manifest, out_dir);

  auto names = corpus::class_names(d.manifest.task, n_classes);
  std::vector<std::string> header{"fold", "macro_f1", "micro_f1", "accuracy"};
  for (const auto& n : names) header.push_back("recall_" + n);
  std::string csv = util::csv_join(header);
  for (std::size_t f = 0; f < result.fold_reports.size(); ++f) {
    const auto& rep = result.fold_reports[f];
    std::vector<std::string> row{std::to_string(f), util::format_full(rep.macro_f1),
                                 util::format_full(rep.micro_f1),
                                 util::format_full(rep.accuracy)};
    for (const auto& rec : rep.per_class_accuracy)
      row.push_back(rec ? util::format_full(*rec) : "NA");
    csv += util::csv_join(row);
  }
  {
    std::vector<std::string> row{"mean", util::format_full(result.mean_macro_f1),
                                 util::format_full(result.mean_micro_f1),
                                 util::format_full(result.mean_accuracy)};
    for (const auto& rec : result.mean_per_class_recall)
      row.push_back(rec ? util::format_full(*rec) : "NA");
    csv += util::csv_join(row);
  }
  util::write_file(out_dir / "folds.csv", csv);

  std::string md = "| Fold | macro-f1 | micro-f1 | accuracy |";
  for (const auto& n : names) md += " " + n + " recall |";
  md += "\n|---|---|---|---|";
  for (std::size_t i = 0; i < names.size(); ++i) md += "---|";
  md += "\n";
  for (std::size_t f = 0; f < result.fold_reports.size(); ++f) {
    const auto& rep = result.fold_reports[f];
    md += "| " + std::to_string(f) + " | " + util::format_double(100.0 * rep.macro_f1, 2) +
          " | " + util::format_double(100.0 * rep.micro_f1, 2) + " | " +
          util::format_double(100.0 * rep.accuracy, 2) + " |";
    for (const auto& rec : rep.per_class_accuracy)
      md += rec ? " " + util::format_double(100.0 * *rec, 2) + " |" : " * |";
    md += "\n";
  }
  md += "| mean | " + util::format_double(100.0 * result.mean_macro_f1, 2) + " | " +
        util::format_double(100.0 * result.mean_micro_f1, 2) + " | " +
        util::format_double(100.0 * result.mean_accuracy, 2) + " |";
  for (const auto& rec : result.mean_per_class_recall)
    md += rec ? " " + util::format_double(100.0 * *rec, 2) + " |" : " * |";
  md += "\n";
  util::write_file(out_dir / "crossval.md", md);

  json summary = {{"command", "crossval"},
                  {"name", m.name},
                  {"status", "ok"},
                  {"seed", m.seed},
                  {"dataset", d.manifest.dataset_id},
                  {"k", m.crossval.k},
                  {"stratified", m.crossval.stratified},
                  {"mean_macro_f1", result.mean_macro_f1},
                  {"mean_micro_f1", result.mean_micro_f1},
                  {"mean_accuracy", result.mean_accuracy},
                  {"task_macro_f1",
                   {{corpus::task_name(d.manifest.task), result.mean_macro_f1}}}};
  util::write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  write_meta(out_dir, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  std::cout << md;
  return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::optional<std::string>& out) {
  std::vector<RunSummary> dataset_runs, task_runs;
  for (const auto& dir : run_dirs) {
    try {
      auto s = read_run_summary(dir);
      if (!s.test_macro_f1.empty()) dataset_runs.push_back(s);
      if (!s.task_macro_f1.empty()) task_runs.push_back(s);
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping " << dir << ": " << e.what() << "\n";
    }
  }
  if (dataset_runs.empty() && task_runs.empty())
    throw ValidationError("no readable run summaries");

  std::string md;
  if (!dataset_runs.empty()) {
    md += "## Test macro-F1 per dataset\n\n" + comparison_markdown(dataset_runs) + "\n";
  }
  if (!task_runs.empty()) {
    md += "## Per-task macro-F1\n\n" + task_comparison_markdown(task_runs) + "\n";
  }
  if (out) {
    std::filesystem::path dir = *out;
    util::write_file(dir / "report.md", md);
    if (!dataset_runs.empty())
      util::write_file(dir / "report_datasets.csv", comparison_csv(dataset_runs));
    if (!task_runs.empty())
      util::write_file(dir / "report_tasks.csv", task_comparison_csv(task_runs));
  }
  std::cout << md;
  return 0;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"multi-domain / multi-task citation text classification toolkit"};
  app.require_subcommand(1);

  Overrides ov;

  auto add_globals = [&ov](CLI::App* cmd) {
    cmd->add_option_function<std::string>(
        "--seed", [&ov](const std::string& v) { ov.seed = std::stoull(v); },
        "override the manifest seed");
    cmd->add_option_function<std::string>(
        "--jobs", [&ov](const std::string& v) { ov.jobs = std::stoull(v); },
        "parallel workers for independent cells");
    cmd->add_option_function<std::string>(
        "--out", [&ov](const std::string& v) { ov.out = v; },
        "override the output directory");
  };

  std::string manifest_arg, out_file_arg;
  std::vector<std::string> dirs_arg;

  auto* clean = app.add_subcommand("clean", "deduplicate a dataset and write the audit");
  clean->add_option("manifest", manifest_arg, "dataset manifest JSON")->required();
  clean->add_option("--out", out_file_arg, "cleaned dataset file")->required();

  auto* stats = app.add_subcommand("stats", "corpus statistics after cleaning and splitting");
  stats->add_option("manifest", manifest_arg, "run manifest JSON")->required();
  add_globals(stats);

  auto* prepare = app.add_subcommand("prepare", "validate a run manifest and write previews");
  prepare->add_option("manifest", manifest_arg, "run manifest JSON")->required();
  add_globals(prepare);

  for (const char* name : {"train", "finetune", "multitask", "matrix", "crossval"}) {
    auto* c = app.add_subcommand(name, std::string(name) + " per the run manifest");
    c->add_option("manifest", manifest_arg, "run manifest JSON")->required();
    add_globals(c);
  }

  auto* report = app.add_subcommand("report", "merge run summaries into comparison tables");
  report->add_option("run_dirs", dirs_arg, "run directories")->required()->expected(-1);
  report->add_option("--out", out_file_arg, "write report files to this directory");

  try {
    std::vector<const char*> argv;
    argv.push_back("citekit");
    for (const auto& a : args) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (clean->parsed()) return cmd_clean(manifest_arg, out_file_arg);
    if (stats->parsed()) return cmd_stats(manifest_arg, ov);
    if (prepare->parsed()) return cmd_prepare(manifest_arg, ov);
    if (app.get_subcommand("train")->parsed()) return cmd_train(manifest_arg, ov);
    if (app.get_subcommand("finetune")->parsed()) return cmd_finetune(manifest_arg, ov);
    if (app.get_subcommand("multitask")->parsed()) return cmd_multitask(manifest_arg, ov);
    if (app.get_subcommand("matrix")->parsed()) return cmd_matrix(manifest_arg, ov);
    if (app.get_subcommand("crossval")->parsed()) return cmd_crossval(manifest_arg, ov);
    if (report->parsed())
      return cmd_report(dirs_arg, out_file_arg.empty()
                                      ? std::nullopt
                                      : std::optional<std::string>(out_file_arg));
    throw ValidationError("no command given");
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace citekit::cli
