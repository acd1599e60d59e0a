#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "citekit/train/early_stop.hpp"
#include "citekit/train/trainer.hpp"
#include "citekit/util/error.hpp"
#include "../support/synthetic.hpp"

using namespace citekit;
using corpus::HarmonizedRecord;
using corpus::Task;

namespace {

model::EncoderConfig mean_pool_config(int dim = 12) {
  model::EncoderConfig cfg;
  cfg.kind = model::EncoderKind::MeanPool;
  cfg.embed_dim = dim;
  cfg.max_len = 8;
  return cfg;
}

schedule::PlanDataset plan_dataset(const std::string& id,
                                   std::vector<HarmonizedRecord> records) {
  schedule::PlanDataset ds;
  ds.dataset_id = id;
  ds.domain_tag = corpus::Domain::Movie;
  ds.task = records.front().task;
  ds.records = std::move(records);
  return ds;
}

struct ToySetup {
  schedule::SchedulePlan plan;
  train::ValSets val;
  model::Vocab vocab;
  model::ModelParams params;
};

ToySetup toy_setup(std::uint64_t seed, std::size_t n_per_class = 40) {
  auto train_records = testsupport::separable_records("toy", "f", 2, n_per_class, seed);
  auto val_records = testsupport::separable_records("toy", "f", 2, 12, seed + 1);
  ToySetup s;
  s.plan = schedule::build_shuffled({plan_dataset("toy", train_records)}, seed);
  s.val = {{"sentiment", val_records}};
  std::vector<std::string> texts;
  for (const auto& r : train_records) texts.push_back(r.text);
  s.vocab = model::build_vocab(texts, 1, 1000);
  s.params = train::make_model(mean_pool_config(), s.vocab.size(), {{"sentiment", 2}}, seed);
  return s;
}

train::TrainConfig fast_config(std::size_t epochs = 10) {
  train::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 8;
  cfg.patience = epochs;
  cfg.optimizer.learning_rate = 0.05;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("early stopper follows the patience rule") {
  // patience 3, scores 0.5 0.6 0.6 0.6 0.6 -> stops after epoch 5, best epoch 2
  train::EarlyStopper stopper(3, 1e-4);
  CHECK(stopper.observe(0.5));
  CHECK_FALSE(stopper.should_stop());
  CHECK(stopper.observe(0.6));
  CHECK_FALSE(stopper.should_stop());
  CHECK_FALSE(stopper.observe(0.6));
  CHECK_FALSE(stopper.should_stop());
  CHECK_FALSE(stopper.observe(0.6));
  CHECK_FALSE(stopper.should_stop());
  CHECK_FALSE(stopper.observe(0.6));
  CHECK(stopper.should_stop());
  CHECK(stopper.best_epoch() == 2);
  CHECK(stopper.best_score() == doctest::Approx(0.6));
}

TEST_CASE("early stop never fires before patience epochs after the best") {
  train::EarlyStopper stopper(4, 0.0);
  stopper.observe(0.9);
  for (int i = 0; i < 3; ++i) {
    stopper.observe(0.1);
    CHECK_FALSE(stopper.should_stop());
  }
  stopper.observe(0.1);
  CHECK(stopper.should_stop());
  CHECK_THROWS_AS(train::EarlyStopper(0, 0.0), ValidationError);
}

TEST_CASE("improvements below min_delta do not reset patience") {
  train::EarlyStopper stopper(2, 1e-2);
  stopper.observe(0.50);
  CHECK_FALSE(stopper.observe(0.505));  // within min_delta: not an improvement
  stopper.observe(0.505);
  CHECK(stopper.should_stop());
  CHECK(stopper.best_epoch() == 1);
}

TEST_CASE("training a separable corpus reaches high validation accuracy") {
  auto s = toy_setup(11);
  auto result = train::train(std::move(s.params), s.plan, s.val, s.vocab, fast_config(15));
  REQUIRE_FALSE(result.log.epochs.empty());
  double best_acc = 0;
  for (const auto& e : result.log.epochs)
    best_acc = std::max(best_acc, e.val_accuracy.at("sentiment"));
  CHECK(best_acc >= 0.95);
}

TEST_CASE("epochs 1 runs exactly one epoch regardless of patience") {
  auto s = toy_setup(13);
  auto cfg = fast_config(1);
  cfg.patience = 10;
  auto result = train::train(std::move(s.params), s.plan, s.val, s.vocab, cfg);
  CHECK(result.log.epochs.size() == 1);
  CHECK(result.log.best_epoch == 1);
}

TEST_CASE("training is deterministic given config, data and seed") {
  auto a = toy_setup(17);
  auto b = toy_setup(17);
  auto ra = train::train(std::move(a.params), a.plan, a.val, a.vocab, fast_config(5));
  auto rb = train::train(std::move(b.params), b.plan, b.val, b.vocab, fast_config(5));
  REQUIRE(ra.log.epochs.size() == rb.log.epochs.size());
  for (std::size_t i = 0; i < ra.log.epochs.size(); ++i) {
    CHECK(ra.log.epochs[i].train_loss == rb.log.epochs[i].train_loss);
    CHECK(ra.log.epochs[i].val_macro_f1.at("sentiment") ==
          rb.log.epochs[i].val_macro_f1.at("sentiment"));
  }
  for (const auto& [name, t] : ra.params.tensors)
    CHECK((t - rb.params.tensors.at(name)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(train_log_csv(ra.log) == train_log_csv(rb.log));
}

TEST_CASE("best-epoch parameters reproduce the logged best metric") {
  auto s = toy_setup(19);
  auto cfg = fast_config(12);
  cfg.patience = 3;
  auto result = train::train(std::move(s.params), s.plan, s.val, s.vocab, cfg);
  REQUIRE(result.log.best_epoch >= 1);
  auto report =
      train::evaluate_records(result.params, s.vocab, s.val.at("sentiment"), cfg.batch_size);
  CHECK(report.macro_f1 ==
        doctest::Approx(result.log.epochs[result.log.best_epoch - 1].val_macro_f1.at("sentiment"))
            .epsilon(1e-12));
  CHECK(result.log.best_score == doctest::Approx(report.macro_f1).epsilon(1e-12));
}

TEST_CASE("training aborts with a diagnostic when the loss blows up") {
  auto s = toy_setup(23);
  auto cfg = fast_config(5);
  cfg.optimizer.learning_rate = 1e300;
  CHECK_THROWS_WITH_AS(
      train::train(std::move(s.params), s.plan, s.val, s.vocab, cfg),
      doctest::Contains("not finite"), RuntimeFailure);
}

TEST_CASE("train validates plan, heads and validation sets") {
  auto s = toy_setup(29);
  train::ValSets empty_val;
  CHECK_THROWS_AS(train::train(std::move(s.params), s.plan, empty_val, s.vocab, fast_config(2)),
                  ValidationError);

  auto s2 = toy_setup(29);
  auto intent_only =
      train::make_model(mean_pool_config(), s2.vocab.size(), {{"intent", 3}}, 1);
  CHECK_THROWS_AS(train::train(std::move(intent_only), s2.plan, s2.val, s2.vocab, fast_config(2)),
                  ValidationError);
}

TEST_CASE("fine_tune with zero epochs returns the checkpoint parameters untouched") {
  auto s = toy_setup(31);
  model::Checkpoint ckpt;
  ckpt.params = s.params;
  ckpt.vocab = s.vocab;
  auto target = testsupport::separable_records("toy", "f", 2, 10, 99);
  auto cfg = fast_config(0);
  auto result = train::fine_tune(ckpt, target, s.val, cfg);
  CHECK(result.log.epochs.empty());
  CHECK(result.log.phase == "finetune");
  for (const auto& [name, t] : ckpt.params.tensors)
    CHECK((t - result.params.tensors.at(name)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fine_tune rejects labels outside the checkpointed head") {
  auto s = toy_setup(37);
  model::Checkpoint ckpt;
  ckpt.params = s.params;  // 2-class sentiment head
  ckpt.vocab = s.vocab;
  std::vector<HarmonizedRecord> ternary =
      testsupport::separable_records("t3", "f", 3, 4, 5);  // includes Neutral
  CHECK_THROWS_AS(train::fine_tune(ckpt, ternary, s.val, fast_config(1)), ValidationError);

  std::vector<HarmonizedRecord> intent =
      testsupport::separable_records("ti", "g", 3, 4, 5, Task::Intent);
  CHECK_THROWS_AS(train::fine_tune(ckpt, intent, s.val, fast_config(1)), ValidationError);
}

TEST_CASE("fine_tune on the checkpoint's own training data does not regress") {
  auto s = toy_setup(41);
  auto base = train::train(std::move(s.params), s.plan, s.val, s.vocab, fast_config(10));
  const double base_score = base.log.best_score;

  model::Checkpoint ckpt;
  ckpt.params = base.params;
  ckpt.vocab = s.vocab;
  auto target = testsupport::separable_records("toy", "f", 2, 40, 11);
  auto cfg = fast_config(5);
  auto tuned = train::fine_tune(ckpt, target, s.val, cfg);
  // best-epoch restoration guarantees the validation metric cannot drop by
  // more than min_delta relative to the checkpoint
  CHECK(tuned.log.best_score >= base_score - cfg.min_delta);
}

TEST_CASE("multitask training updates only the active head per batch") {
  // a plan containing zero intent batches must leave the intent head identical
  auto sent_records = testsupport::separable_records("s", "f", 2, 24, 3);
  auto plan = schedule::build_shuffled({plan_dataset("s", sent_records)}, 5);
  std::vector<std::string> texts;
  for (const auto& r : sent_records) texts.push_back(r.text);
  auto vocab = model::build_vocab(texts, 1, 1000);
  auto params = train::make_model(mean_pool_config(), vocab.size(),
                                  {{"sentiment", 2}, {"intent", 3}}, 13);
  auto initial_w = params.at(model::head_weight_name("intent"));
  auto initial_b = params.at(model::head_bias_name("intent"));

  train::ValSets val{{"sentiment", testsupport::separable_records("s", "f", 2, 8, 4)}};
  auto result = train::train(std::move(params), plan, val, vocab, fast_config(4));

  CHECK((result.params.at(model::head_weight_name("intent")) - initial_w).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((result.params.at(model::head_bias_name("intent")) - initial_b).cwiseAbs().maxCoeff() ==
        0.0);
  // while the sentiment head moved
  CHECK((result.params.at(model::head_weight_name("sentiment"))).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("multitask training reaches both heads and reports per-task metrics") {
  auto sent = testsupport::separable_records("s", "fs", 2, 36, 3);
  auto intent = testsupport::separable_records("i", "fi", 3, 24, 7, Task::Intent);
  auto plan = schedule::build_multitask({plan_dataset("s", sent)}, {plan_dataset("i", intent)},
                                        schedule::MixPolicy::Alternating, 9);
  std::vector<std::string> texts;
  for (const auto& d : plan.datasets)
    for (const auto& r : d.records) texts.push_back(r.text);
  auto vocab = model::build_vocab(texts, 1, 2000);
  auto params = train::make_model(mean_pool_config(16), vocab.size(),
                                  {{"sentiment", 2}, {"intent", 3}}, 15);
  train::ValSets val{
      {"sentiment", testsupport::separable_records("s", "fs", 2, 10, 30)},
      {"intent", testsupport::separable_records("i", "fi", 3, 8, 31, Task::Intent)}};
  auto result = train::train_multitask(std::move(params), plan, val, vocab, fast_config(20));
  REQUIRE_FALSE(result.log.epochs.empty());
  const auto& last = result.log.epochs[result.log.best_epoch - 1];
  CHECK(last.val_macro_f1.count("sentiment") == 1);
  CHECK(last.val_macro_f1.count("intent") == 1);
  CHECK(last.val_accuracy.at("sentiment") >= 0.9);
  CHECK(last.val_accuracy.at("intent") >= 0.9);

  // the log csv carries one metric column block per task
  auto csv = train_log_csv(result.log);
  CHECK(csv.find("val_macro_f1_sentiment") != std::string::npos);
  CHECK(csv.find("val_macro_f1_intent") != std::string::npos);
  CHECK_THROWS_AS(
      train::train_multitask(train::make_model(mean_pool_config(16), vocab.size(),
                                               {{"sentiment", 2}, {"intent", 3}}, 15),
                             schedule::build_shuffled({plan_dataset("s", sent)}, 2), val, vocab,
                             fast_config(1)),
      ValidationError);
}
