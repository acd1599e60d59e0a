#include "citekit/eval/metrics.hpp"

#include "citekit/util/error.hpp"

namespace citekit::eval {

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (auto c : cells_) t += c;
  return t;
}

std::size_t ConfusionMatrix::fp(int c) const {
  std::size_t col = 0;
  for (int g = 0; g < k_; ++g) col += at(g, c);
  return col - tp(c);
}

std::size_t ConfusionMatrix::fn(int c) const {
  std::size_t row = 0;
  for (int p = 0; p < k_; ++p) row += at(c, p);
  return row - tp(c);
}

ConfusionMatrix confusion(const std::vector<int>& gold, const std::vector<int>& pred, int k) {
  if (gold.size() != pred.size())
    throw ValidationError("confusion: gold and pred lengths differ (" +
                          std::to_string(gold.size()) + " vs " + std::to_string(pred.size()) +
                          ")");
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || gold[i] >= k || pred[i] < 0 || pred[i] >= k)
      throw ValidationError("confusion: label out of range at index " + std::to_string(i));
    cm.at(gold[i], pred[i])++;
  }
  return cm;
}

std::vector<std::optional<double>> per_class_accuracy(const ConfusionMatrix& cm) {
  std::vector<std::optional<double>> out;
  out.reserve(cm.classes());
  for (int c = 0; c < cm.classes(); ++c) {
    std::size_t support = cm.tp(c) + cm.fn(c);
    if (support == 0)
      out.push_back(std::nullopt);
    else
      out.push_back(static_cast<double>(cm.tp(c)) / static_cast<double>(support));
  }
  return out;
}

F1Scores micro_macro_f1(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw ValidationError("micro_macro_f1: empty confusion matrix");
  F1Scores s;
  std::size_t pooled_tp = 0, pooled_fp = 0, pooled_fn = 0;
  double macro_sum = 0.0;
  for (int c = 0; c < cm.classes(); ++c) {
    std::size_t tp = cm.tp(c), fp = cm.fp(c), fn = cm.fn(c);
    pooled_tp += tp;
    pooled_fp += fp;
    pooled_fn += fn;
    std::size_t denom = 2 * tp + fp + fn;
    double f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    s.per_class.push_back(f1);
    macro_sum += f1;
  }
  s.macro = macro_sum / cm.classes();
  std::size_t micro_denom = 2 * pooled_tp + pooled_fp + pooled_fn;
  s.micro = micro_denom == 0
                ? 0.0
                : 2.0 * static_cast<double>(pooled_tp) / static_cast<double>(micro_denom);
  return s;
}

EvalReport evaluate(const std::vector<int>& gold, const std::vector<int>& pred, int k,
                    const std::string& train_id, const std::string& test_id) {
  EvalReport r;
  r.train_dataset_id = train_id;
  r.test_dataset_id = test_id;
  r.confusion = confusion(gold, pred, k);
  r.per_class_accuracy = per_class_accuracy(r.confusion);
  auto f1 = micro_macro_f1(r.confusion);
  r.micro_f1 = f1.micro;
  r.macro_f1 = f1.macro;
  std::size_t correct = 0;
  for (int c = 0; c < k; ++c) correct += r.confusion.tp(c);
  r.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  return r;
}

}  // namespace citekit::eval
