#ifndef CITEKIT_EVAL_CROSSVAL_HPP
#define CITEKIT_EVAL_CROSSVAL_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "citekit/corpus/types.hpp"
#include "citekit/eval/metrics.hpp"
#include "citekit/model/config.hpp"
#include "citekit/train/trainer.hpp"

namespace citekit::eval {

// Trains on the k-1 training folds and returns predictions for the held-out
// fold. Injectable so the protocol is testable with a trivial learner.
using FoldLearner = std::function<std::vector<int>(
    const std::vector<corpus::HarmonizedRecord>& train_records,
    const std::vector<corpus::HarmonizedRecord>& test_records, std::uint64_t fold_seed)>;

struct CrossValResult {
  std::vector<EvalReport> fold_reports;
  double mean_macro_f1 = 0.0;
  double mean_micro_f1 = 0.0;
  double mean_accuracy = 0.0;
  std::vector<std::optional<double>> mean_per_class_recall;  // over folds where defined
};

// Each sample is tested exactly once; per-fold metrics are averaged unweighted.
// Fold seeds derive from (seed, fold index).
CrossValResult cross_validate(const std::vector<corpus::HarmonizedRecord>& records,
                              std::size_t k, bool stratified, std::uint64_t seed, int n_classes,
                              const FoldLearner& learner);

// The real learner: fresh parameters per fold, early stopping on a validation
// slice carved from the training folds.
FoldLearner make_model_fold_learner(const model::EncoderConfig& model_cfg,
                                    const train::TrainConfig& train_cfg, int n_classes,
                                    double val_fraction = 0.1);

}  // namespace citekit::eval

#endif
