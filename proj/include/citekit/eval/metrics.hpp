#ifndef CITEKIT_EVAL_METRICS_HPP
#define CITEKIT_EVAL_METRICS_HPP

#include <optional>
#include <string>
#include <vector>

namespace citekit::eval {

// K x K counts, gold label selects the row, prediction the column.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int k) : k_(k), cells_(static_cast<std::size_t>(k) * k, 0) {}

  int classes() const { return k_; }
  std::size_t& at(int gold, int pred) { return cells_[static_cast<std::size_t>(gold) * k_ + pred]; }
  std::size_t at(int gold, int pred) const {
    return cells_[static_cast<std::size_t>(gold) * k_ + pred];
  }

  std::size_t total() const;
  std::size_t tp(int c) const { return at(c, c); }
  std::size_t fp(int c) const;  // column sum minus tp
  std::size_t fn(int c) const;  // row sum minus tp

 private:
  int k_ = 0;
  std::vector<std::size_t> cells_;
};

ConfusionMatrix confusion(const std::vector<int>& gold, const std::vector<int>& pred, int k);

// Per-class recall. Classes absent from gold are reported as nullopt, not zero.
std::vector<std::optional<double>> per_class_accuracy(const ConfusionMatrix& cm);

// Per-class F1 with 0 for empty denominators; macro = unweighted mean,
// micro from pooled TP/FP/FN.
struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
  std::vector<double> per_class;
};

F1Scores micro_macro_f1(const ConfusionMatrix& cm);

struct EvalReport {
  std::string train_dataset_id;
  std::string test_dataset_id;
  ConfusionMatrix confusion;
  std::vector<std::optional<double>> per_class_accuracy;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
};

EvalReport evaluate(const std::vector<int>& gold, const std::vector<int>& pred, int k,
                    const std::string& train_id = "", const std::string& test_id = "");

}  // namespace citekit::eval

#endif
