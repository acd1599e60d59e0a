#ifndef CITEKIT_EVAL_MATRIX_HPP
#define CITEKIT_EVAL_MATRIX_HPP

#include <optional>
#include <string>
#include <vector>

#include "citekit/corpus/corpus.hpp"
#include "citekit/model/config.hpp"
#include "citekit/train/trainer.hpp"

namespace citekit::eval {

struct MatrixCell {
  std::optional<double> macro_f1;
  std::string error;  // set when the cell failed
};

struct CrossDomainMatrix {
  std::vector<std::string> dataset_ids;           // row and column order
  std::vector<std::vector<MatrixCell>> cells;     // [train row][test column]
};

struct MatrixDataset {
  std::string dataset_id;
  corpus::SplitResult splits;
};

// One model per dataset (trained on its train split, early-stopped on its val
// split), evaluated on every dataset's test split. Failures are recorded per
// cell; a training failure marks the whole row. Rows may run in parallel.
CrossDomainMatrix cross_domain_matrix(const std::vector<MatrixDataset>& datasets,
                                      const model::EncoderConfig& model_cfg,
                                      const train::TrainConfig& train_cfg, int n_classes,
                                      std::size_t jobs = 1);

std::string matrix_csv(const CrossDomainMatrix& matrix);
std::string matrix_markdown(const CrossDomainMatrix& matrix);

}  // namespace citekit::eval

#endif
