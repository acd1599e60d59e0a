#ifndef CITEKIT_CLI_REPORTS_HPP
#define CITEKIT_CLI_REPORTS_HPP

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace citekit::cli {

// One run directory's summary.json, read back for report merging.
struct RunSummary {
  std::string name;
  std::string command;
  std::string status;
  std::vector<std::string> dataset_order;       // listing order of the run
  std::map<std::string, double> test_macro_f1;  // per test dataset
  std::map<std::string, double> task_macro_f1;  // per task
};

RunSummary read_run_summary(const std::filesystem::path& run_dir);

// Rows = runs, columns = test datasets; macro-F1 in percent (2 decimals).
std::string comparison_markdown(const std::vector<RunSummary>& runs);
std::string comparison_csv(const std::vector<RunSummary>& runs);

// Rows = tasks, columns = runs; the multi-task vs single-task block.
std::string task_comparison_markdown(const std::vector<RunSummary>& runs);
std::string task_comparison_csv(const std::vector<RunSummary>& runs);

}  // namespace citekit::cli

#endif
