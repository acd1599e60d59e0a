#ifndef CITEKIT_CLI_COMMANDS_HPP
#define CITEKIT_CLI_COMMANDS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace citekit::cli {

// Global flag overrides applied on top of a run manifest.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
};

// Full CLI entry point. Exit codes: 0 success, 1 validation error, 2 runtime
// failure.
int run(const std::vector<std::string>& args);

int cmd_clean(const std::string& dataset_manifest, const std::string& out_file);
int cmd_stats(const std::string& run_manifest, const Overrides& ov);
int cmd_prepare(const std::string& run_manifest, const Overrides& ov);
int cmd_train(const std::string& run_manifest, const Overrides& ov);
int cmd_finetune(const std::string& run_manifest, const Overrides& ov);
int cmd_multitask(const std::string& run_manifest, const Overrides& ov);
int cmd_matrix(const std::string& run_manifest, const Overrides& ov);
int cmd_crossval(const std::string& run_manifest, const Overrides& ov);
int cmd_report(const std::vector<std::string>& run_dirs, const std::optional<std::string>& out);

}  // namespace citekit::cli

#endif
