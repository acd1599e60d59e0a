#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "citekit/eval/crossval.hpp"
#include "citekit/eval/matrix.hpp"
#include "citekit/eval/metrics.hpp"
#include "citekit/util/error.hpp"
#include "citekit/util/rng.hpp"
#include "../support/synthetic.hpp"

using namespace citekit;
using corpus::HarmonizedRecord;

namespace {

// Independent brute-force oracle: per-class tallies computed by direct array
// scans, F1 from the formula, no ConfusionMatrix involved.
struct OracleScores {
  double micro, macro, accuracy;
  std::vector<double> recall;  // NaN marks undefined
};

OracleScores oracle(const std::vector<int>& gold, const std::vector<int>& pred, int k) {
  OracleScores s{};
  double macro_sum = 0.0;
  std::size_t pooled_tp = 0, pooled_fp = 0, pooled_fn = 0, correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (gold[i] == pred[i]) ++correct;
  for (int c = 0; c < k; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold[i] == c && pred[i] == c) ++tp;
      if (gold[i] != c && pred[i] == c) ++fp;
      if (gold[i] == c && pred[i] != c) ++fn;
      if (gold[i] == c) ++support;
    }
    pooled_tp += tp;
    pooled_fp += fp;
    pooled_fn += fn;
    double f1 = (2 * tp + fp + fn) == 0
                    ? 0.0
                    : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    macro_sum += f1;
    s.recall.push_back(support == 0 ? std::nan("")
                                    : static_cast<double>(tp) / static_cast<double>(support));
  }
  s.macro = macro_sum / k;
  s.micro = (2 * pooled_tp + pooled_fp + pooled_fn) == 0
                ? 0.0
                : 2.0 * static_cast<double>(pooled_tp) /
                      static_cast<double>(2 * pooled_tp + pooled_fp + pooled_fn);
  s.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  return s;
}

}  // namespace

TEST_CASE("confusion fills exact counts") {
  auto cm = eval::confusion({0, 1}, {0, 1}, 2);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(1, 1) == 1);
  CHECK(cm.at(0, 1) == 0);

  auto cm2 = eval::confusion({0, 0}, {1, 1}, 2);
  CHECK(cm2.at(0, 1) == 2);
  CHECK(cm2.total() == 2);

  CHECK_THROWS_AS(eval::confusion({0}, {0, 1}, 2), ValidationError);
  CHECK_THROWS_AS(eval::confusion({0, 5}, {0, 1}, 2), ValidationError);
}

TEST_CASE("confusion matches a brute-force recount on random data") {
  util::Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(4));
    std::vector<int> gold, pred;
    for (int i = 0; i < 200; ++i) {
      gold.push_back(static_cast<int>(rng.below(k)));
      pred.push_back(static_cast<int>(rng.below(k)));
    }
    auto cm = eval::confusion(gold, pred, k);
    for (int g = 0; g < k; ++g)
      for (int p = 0; p < k; ++p) {
        std::size_t count = 0;
        for (std::size_t i = 0; i < gold.size(); ++i)
          if (gold[i] == g && pred[i] == p) ++count;
        CHECK(cm.at(g, p) == count);
      }
  }
}

TEST_CASE("per-class accuracy is recall with undefined for absent classes") {
  auto perfect = eval::per_class_accuracy(eval::confusion({0, 1, 2}, {0, 1, 2}, 3));
  for (const auto& r : perfect) CHECK(*r == 1.0);

  auto cm = eval::confusion({0, 0, 1}, {0, 1, 1}, 2);
  auto recall = eval::per_class_accuracy(cm);
  CHECK(*recall[0] == doctest::Approx(0.5));
  CHECK(*recall[1] == doctest::Approx(1.0));

  auto with_absent = eval::per_class_accuracy(eval::confusion({0, 0}, {0, 1}, 3));
  CHECK_FALSE(with_absent[2].has_value());  // class 2 absent from gold
}

TEST_CASE("micro and macro f1 match the hand-computed case") {
  // two classes with TP/FP/FN = (1,1,0) and (1,0,1):
  // gold (0,1,1), pred (0,0,1): class0 tp1 fp1 fn0; class1 tp1 fp0 fn1
  auto cm = eval::confusion({0, 1, 1}, {0, 0, 1}, 2);
  auto f1 = eval::micro_macro_f1(cm);
  CHECK(f1.per_class[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(f1.per_class[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(f1.macro == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(f1.micro == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  auto all_correct = eval::micro_macro_f1(eval::confusion({0, 1, 2}, {0, 1, 2}, 3));
  CHECK(all_correct.micro == 1.0);
  CHECK(all_correct.macro == 1.0);
}

TEST_CASE("metric oracle equivalence on 1000 random instances") {
  util::Rng rng(4242);
  const std::vector<int> ks{2, 3, 5};
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = ks[trial % ks.size()];
    const std::size_t n = 1 + rng.below(200);
    std::vector<int> gold, pred;
    for (std::size_t i = 0; i < n; ++i) {
      gold.push_back(static_cast<int>(rng.below(k)));
      pred.push_back(static_cast<int>(rng.below(k)));
    }
    auto report = eval::evaluate(gold, pred, k);
    auto expect = oracle(gold, pred, k);
    CHECK(report.micro_f1 == expect.micro);  // exact, zero tolerance
    CHECK(report.macro_f1 == expect.macro);
    CHECK(report.accuracy == expect.accuracy);
    CHECK(report.micro_f1 == report.accuracy);  // single-label identity
    for (int c = 0; c < k; ++c) {
      if (std::isnan(expect.recall[static_cast<std::size_t>(c)]))
        CHECK_FALSE(report.per_class_accuracy[static_cast<std::size_t>(c)].has_value());
      else
        CHECK(*report.per_class_accuracy[static_cast<std::size_t>(c)] ==
              expect.recall[static_cast<std::size_t>(c)]);
    }
  }
}

TEST_CASE("macro f1 is invariant under class relabeling") {
  util::Rng rng(88);
  std::vector<int> gold, pred;
  for (int i = 0; i < 300; ++i) {
    gold.push_back(static_cast<int>(rng.below(3)));
    pred.push_back(static_cast<int>(rng.below(3)));
  }
  auto base = eval::micro_macro_f1(eval::confusion(gold, pred, 3));
  // permutation (0,1,2) -> (2,0,1)
  auto permute = [](int c) { return (c + 2) % 3; };
  std::vector<int> gold_p, pred_p;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    gold_p.push_back(permute(gold[i]));
    pred_p.push_back(permute(pred[i]));
  }
  auto permuted = eval::micro_macro_f1(eval::confusion(gold_p, pred_p, 3));
  CHECK(base.macro == doctest::Approx(permuted.macro).epsilon(1e-15));
  CHECK(base.micro == doctest::Approx(permuted.micro).epsilon(1e-15));
}

TEST_CASE("cross validation averages fold metrics and tests each sample once") {
  auto records = testsupport::separable_records("cv", "cv", 2, 30, 5);

  std::vector<std::vector<std::string>> tested_keys;
  eval::FoldLearner majority = [&](const std::vector<HarmonizedRecord>& train_records,
                                   const std::vector<HarmonizedRecord>& test_records,
                                   std::uint64_t) {
    std::vector<std::string> keys;
    for (const auto& r : test_records) keys.push_back(r.normalized_key);
    tested_keys.push_back(keys);
    std::size_t pos = std::count_if(train_records.begin(), train_records.end(), [](const auto& r) {
      return corpus::label_class_index(r.label) == 0;
    });
    int majority_class = pos * 2 >= train_records.size() ? 0 : 1;
    return std::vector<int>(test_records.size(), majority_class);
  };

  auto result = eval::cross_validate(records, 5, true, 7, 2, majority);
  REQUIRE(result.fold_reports.size() == 5);

  // averaged metric = unweighted mean of the fold metrics, to 1e-12
  double macro_sum = 0.0;
  for (const auto& r : result.fold_reports) macro_sum += r.macro_f1;
  CHECK(result.mean_macro_f1 == doctest::Approx(macro_sum / 5.0).epsilon(1e-12));

  // every sample tested exactly once
  std::multiset<std::string> seen;
  for (const auto& fold : tested_keys)
    for (const auto& k : fold) seen.insert(k);
  CHECK(seen.size() == records.size());
  std::set<std::string> unique(seen.begin(), seen.end());
  CHECK(unique.size() == records.size());
}

TEST_CASE("symmetric halves with a deterministic trivial learner give equal fold reports") {
  // two folds, each perfectly balanced; constant predictor -> identical reports
  auto records = testsupport::separable_records("sym", "sym", 2, 10, 9);
  eval::FoldLearner constant = [](const std::vector<HarmonizedRecord>&,
                                  const std::vector<HarmonizedRecord>& test_records,
                                  std::uint64_t) {
    return std::vector<int>(test_records.size(), 0);
  };
  auto result = eval::cross_validate(records, 2, true, 3, 2, constant);
  REQUIRE(result.fold_reports.size() == 2);
  CHECK(result.fold_reports[0].macro_f1 == result.fold_reports[1].macro_f1);
  CHECK(result.fold_reports[0].micro_f1 == result.fold_reports[1].micro_f1);
}

TEST_CASE("model-backed cross validation learns a separable corpus") {
  auto records = testsupport::separable_records("cvm", "cvm", 2, 40, 11);
  model::EncoderConfig cfg;
  cfg.kind = model::EncoderKind::MeanPool;
  cfg.embed_dim = 12;
  cfg.max_len = 8;
  train::TrainConfig tc;
  tc.epochs = 12;
  tc.batch_size = 8;
  tc.optimizer.learning_rate = 0.05;
  tc.patience = 12;
  auto learner = eval::make_model_fold_learner(cfg, tc, 2, 0.2);
  auto result = eval::cross_validate(records, 4, true, 21, 2, learner);
  CHECK(result.mean_macro_f1 > 0.9);
}

TEST_CASE("cross-domain matrix marks failing rows and keeps the rest") {
  model::EncoderConfig cfg;
  cfg.kind = model::EncoderKind::MeanPool;
  cfg.embed_dim = 12;
  cfg.max_len = 8;
  train::TrainConfig tc;
  tc.epochs = 8;
  tc.batch_size = 8;
  tc.optimizer.learning_rate = 0.05;
  tc.patience = 8;
  tc.seed = 77;

  auto make_split = [](const std::string& id, const std::string& family, std::uint64_t seed) {
    corpus::SplitResult s;
    s.train = testsupport::separable_records(id, family, 2, 30, seed);
    s.val = testsupport::separable_records(id, family, 2, 8, seed + 1);
    s.test = testsupport::separable_records(id, family, 2, 10, seed + 2);
    return s;
  };
  std::vector<eval::MatrixDataset> datasets;
  datasets.push_back({"alpha", make_split("alpha", "fa", 1)});
  datasets.push_back({"beta", make_split("beta", "fb", 2)});
  datasets.push_back({"broken", {}});  // no records at all: the row must fail

  auto matrix = eval::cross_domain_matrix(datasets, cfg, tc, 2, 1);
  REQUIRE(matrix.dataset_ids.size() == 3);
  CHECK(matrix.cells[0][0].macro_f1.has_value());
  CHECK(*matrix.cells[0][0].macro_f1 > 0.9);  // in-domain
  CHECK(matrix.cells[1][1].macro_f1.has_value());
  CHECK_FALSE(matrix.cells[2][0].macro_f1.has_value());  // failed row recorded
  CHECK_FALSE(matrix.cells[2][0].error.empty());
  // evaluation against the broken dataset's empty test split also fails per cell
  CHECK_FALSE(matrix.cells[0][2].macro_f1.has_value());

  auto csv = eval::matrix_csv(matrix);
  CHECK(csv.find("alpha") != std::string::npos);
  auto md = eval::matrix_markdown(matrix);
  CHECK(md.find("| Train \\ Test |") != std::string::npos);

  CHECK_THROWS_AS(eval::cross_domain_matrix({datasets[0]}, cfg, tc, 2, 1), ValidationError);
}

TEST_CASE("diagonal cells use disjoint train and test splits") {
  auto records = testsupport::separable_records("d", "fd", 2, 30, 3);
  corpus::SplitResult s = corpus::split(records, {0.6, 0.2, 0.2}, 5, true);
  std::set<std::string> train_keys, test_keys;
  for (const auto& r : s.train) train_keys.insert(r.normalized_key);
  for (const auto& r : s.test) test_keys.insert(r.normalized_key);
  for (const auto& k : test_keys) CHECK(train_keys.count(k) == 0);
}
