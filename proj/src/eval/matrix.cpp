#include "citekit/eval/matrix.hpp"

#include <atomic>
#include <thread>

#include "citekit/schedule/schedule.hpp"
#include "citekit/util/csv.hpp"
#include "citekit/util/error.hpp"
#include "citekit/util/rng.hpp"
#include "citekit/util/text.hpp"

namespace citekit::eval {

namespace {

void run_row(std::size_t row, const std::vector<MatrixDataset>& datasets,
             const model::EncoderConfig& model_cfg, const train::TrainConfig& train_cfg,
             int n_classes, CrossDomainMatrix& out) {
  const auto& train_ds = datasets[row];
  try {
    if (train_ds.splits.train.empty() || train_ds.splits.val.empty())
      throw ValidationError("dataset '" + train_ds.dataset_id + "' lacks train or val records");
    const std::string task = corpus::task_name(train_ds.splits.train.front().task);
    const std::uint64_t row_seed = util::derive_seed(train_cfg.seed, "matrix.row", row);

    std::vector<std::string> texts;
    texts.reserve(train_ds.splits.train.size());
    for (const auto& r : train_ds.splits.train) texts.push_back(r.text);
    auto vocab = model::build_vocab(texts, train_cfg.vocab_min_freq, train_cfg.vocab_max_size);

    schedule::PlanDataset ds;
    ds.dataset_id = train_ds.dataset_id;
    ds.domain_tag = train_ds.splits.train.front().domain_tag;
    ds.task = train_ds.splits.train.front().task;
    ds.records = train_ds.splits.train;
    auto plan = schedule::build_shuffled({std::move(ds)},
                                         util::derive_seed(row_seed, "matrix.plan"), true);

    auto cfg = train_cfg;
    cfg.seed = row_seed;
    auto params = train::make_model(model_cfg, vocab.size(), {{task, n_classes}},
                                    util::derive_seed(row_seed, "matrix.init"));
    auto trained = train::train(std::move(params), plan, {{task, train_ds.splits.val}}, vocab,
                                cfg, "matrix");

    for (std::size_t col = 0; col < datasets.size(); ++col) {
      try {
        const auto& test_records = datasets[col].splits.test;
        if (test_records.empty())
          throw ValidationError("dataset '" + datasets[col].dataset_id + "' has no test split");
        auto report = train::evaluate_records(trained.params, vocab, test_records,
                                              cfg.batch_size, train_ds.dataset_id,
                                              datasets[col].dataset_id);
        out.cells[row][col].macro_f1 = report.macro_f1;
      } catch (const std::exception& e) {
        out.cells[row][col].error = e.what();
      }
    }
  } catch (const std::exception& e) {
    for (std::size_t col = 0; col < datasets.size(); ++col) out.cells[row][col].error = e.what();
  }
}

}  // namespace

CrossDomainMatrix cross_domain_matrix(const std::vector<MatrixDataset>& datasets,
                                      const model::EncoderConfig& model_cfg,
                                      const train::TrainConfig& train_cfg, int n_classes,
                                      std::size_t jobs) {
  if (datasets.size() < 2)
    throw ValidationError("cross_domain_matrix: need at least 2 datasets, got " +
                          std::to_string(datasets.size()));

  CrossDomainMatrix out;
  for (const auto& d : datasets) out.dataset_ids.push_back(d.dataset_id);
  out.cells.assign(datasets.size(), std::vector<MatrixCell>(datasets.size()));

  if (jobs <= 1) {
    for (std::size_t row = 0; row < datasets.size(); ++row)
      run_row(row, datasets, model_cfg, train_cfg, n_classes, out);
    return out;
  }

  // rows are independent; each writes only its own slots
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      std::size_t row = next.fetch_add(1);
      if (row >= datasets.size()) return;
      run_row(row, datasets, model_cfg, train_cfg, n_classes, out);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < std::min(jobs, datasets.size()); ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

std::string matrix_csv(const CrossDomainMatrix& matrix) {
  std::string out = "train\\test";
  for (const auto& id : matrix.dataset_ids) out += "," + util::csv_escape(id);
  out += "\n";
  for (std::size_t r = 0; r < matrix.dataset_ids.size(); ++r) {
    out += util::csv_escape(matrix.dataset_ids[r]);
    for (std::size_t c = 0; c < matrix.dataset_ids.size(); ++c) {
      const auto& cell = matrix.cells[r][c];
      out += ",";
      out += cell.macro_f1 ? util::format_full(*cell.macro_f1) : "";
    }
    out += "\n";
  }
  return out;
}

std::string matrix_markdown(const CrossDomainMatrix& matrix) {
  std::string out = "| Train \\ Test |";
  for (const auto& id : matrix.dataset_ids) out += " " + id + " |";
  out += "\n|---|";
  for (std::size_t c = 0; c < matrix.dataset_ids.size(); ++c) out += "---|";
  out += "\n";
  for (std::size_t r = 0; r < matrix.dataset_ids.size(); ++r) {
    out += "| " + matrix.dataset_ids[r] + " |";
    for (std::size_t c = 0; c < matrix.dataset_ids.size(); ++c) {
      const auto& cell = matrix.cells[r][c];
      out += cell.macro_f1 ? " " + util::format_double(100.0 * *cell.macro_f1, 2) + " |" : " - |";
    }
    out += "\n";
  }
  return out;
}

}  // namespace citekit::eval
