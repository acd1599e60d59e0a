#include "citekit/schedule/smote.hpp"

#include <algorithm>
#include <map>

#include "citekit/util/error.hpp"
#include "citekit/util/rng.hpp"

namespace citekit::schedule {

SmoteResult smote_augment(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                          const SmoteSpec& spec) {
  if (features.rows() != static_cast<Eigen::Index>(labels.size()))
    throw ValidationError("smote: feature rows and labels differ in count");
  if (labels.empty()) throw ValidationError("smote: empty input");
  if (spec.lambda_range[0] < 0.0 || spec.lambda_range[1] > 1.0 ||
      spec.lambda_range[0] > spec.lambda_range[1])
    throw ValidationError("smote: lambda_range must be within [0, 1]");
  if (spec.k_neighbors < 1) throw ValidationError("smote: k_neighbors must be positive");

  std::map<int, std::vector<Eigen::Index>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<Eigen::Index>(i));

  int minority = by_class.begin()->first;
  for (const auto& [label, idx] : by_class)
    if (idx.size() < by_class.at(minority).size()) minority = label;
  const auto& minority_idx = by_class.at(minority);

  if (minority_idx.size() < spec.k_neighbors + 1)
    throw ValidationError("smote: minority class of size " +
                          std::to_string(minority_idx.size()) + " is smaller than k+1 = " +
                          std::to_string(spec.k_neighbors + 1));

  // k nearest same-class neighbors per minority sample; ties by index
  std::vector<std::vector<Eigen::Index>> neighbors(minority_idx.size());
  for (std::size_t a = 0; a < minority_idx.size(); ++a) {
    std::vector<std::pair<double, Eigen::Index>> dist;
    dist.reserve(minority_idx.size() - 1);
    for (std::size_t b = 0; b < minority_idx.size(); ++b) {
      if (a == b) continue;
      double d2 = (features.row(minority_idx[a]) - features.row(minority_idx[b])).squaredNorm();
      dist.emplace_back(d2, minority_idx[b]);
    }
    std::sort(dist.begin(), dist.end());
    neighbors[a].reserve(spec.k_neighbors);
    for (std::size_t j = 0; j < spec.k_neighbors; ++j) neighbors[a].push_back(dist[j].second);
  }

  SmoteResult out;
  out.minority_label = minority;
  out.features.resize(features.rows() + static_cast<Eigen::Index>(spec.n_synthetic),
                      features.cols());
  out.features.topRows(features.rows()) = features;
  out.labels = labels;

  util::Rng rng(util::derive_seed(spec.seed, "smote"));
  for (std::size_t s = 0; s < spec.n_synthetic; ++s) {
    const std::size_t a = static_cast<std::size_t>(rng.below(minority_idx.size()));
    const Eigen::Index i = minority_idx[a];
    const Eigen::Index j = neighbors[a][static_cast<std::size_t>(rng.below(spec.k_neighbors))];
    const double lambda = rng.uniform_real(spec.lambda_range[0], spec.lambda_range[1]);
    out.features.row(features.rows() + static_cast<Eigen::Index>(s)) =
        features.row(i) + lambda * (features.row(j) - features.row(i));
    out.labels.push_back(minority);
  }
  return out;
}

}  // namespace citekit::schedule
