#include "citekit/cli/reports.hpp"

#include <set>

#include <json.hpp>

#include "citekit/util/csv.hpp"
#include "citekit/util/error.hpp"
#include "citekit/util/io.hpp"
#include "citekit/util/text.hpp"

namespace citekit::cli {

namespace {

using nlohmann::json;

// columns in the runs' own dataset listing order, first seen first
std::vector<std::string> dataset_columns(const std::vector<RunSummary>& runs) {
  std::vector<std::string> cols;
  std::set<std::string> seen;
  for (const auto& r : runs)
    for (const auto& ds : r.dataset_order)
      if (r.test_macro_f1.count(ds) && seen.insert(ds).second) cols.push_back(ds);
  for (const auto& r : runs)
    for (const auto& [ds, score] : r.test_macro_f1)
      if (seen.insert(ds).second) cols.push_back(ds);
  return cols;
}

std::vector<std::string> task_rows(const std::vector<RunSummary>& runs) {
  std::set<std::string> rows;
  for (const auto& r : runs)
    for (const auto& [task, score] : r.task_macro_f1) rows.insert(task);
  return {rows.begin(), rows.end()};
}

}  // namespace

RunSummary read_run_summary(const std::filesystem::path& run_dir) {
  auto path = run_dir / "summary.json";
  json j;
  try {
    j = json::parse(util::read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("cannot parse " + path.string() + ": " + e.what());
  }
  RunSummary s;
  s.name = j.value("name", run_dir.filename().string());
  s.command = j.value("command", "");
  s.status = j.value("status", "");
  if (j.contains("datasets"))
    s.dataset_order = j.at("datasets").get<std::vector<std::string>>();
  if (j.contains("test_macro_f1"))
    s.test_macro_f1 = j.at("test_macro_f1").get<std::map<std::string, double>>();
  if (j.contains("task_macro_f1"))
    s.task_macro_f1 = j.at("task_macro_f1").get<std::map<std::string, double>>();
  return s;
}

std::string comparison_markdown(const std::vector<RunSummary>& runs) {
  auto cols = dataset_columns(runs);
  std::string out = "| Run |";
  for (const auto& c : cols) out += " " + c + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& r : runs) {
    out += "| " + r.name + " |";
    for (const auto& c : cols) {
      auto it = r.test_macro_f1.find(c);
      out += it == r.test_macro_f1.end()
                 ? " - |"
                 : " " + util::format_double(100.0 * it->second, 2) + " |";
    }
    out += "\n";
  }
  return out;
}

std::string comparison_csv(const std::vector<RunSummary>& runs) {
  auto cols = dataset_columns(runs);
  std::vector<std::string> header{"run"};
  header.insert(header.end(), cols.begin(), cols.end());
  std::string out = util::csv_join(header);
  for (const auto& r : runs) {
    std::vector<std::string> row{r.name};
    for (const auto& c : cols) {
      auto it = r.test_macro_f1.find(c);
      row.push_back(it == r.test_macro_f1.end() ? "" : util::format_full(it->second));
    }
    out += util::csv_join(row);
  }
  return out;
}

std::string task_comparison_markdown(const std::vector<RunSummary>& runs) {
  auto rows = task_rows(runs);
  std::string out = "| Task |";
  for (const auto& r : runs) out += " " + r.name + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < runs.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& task : rows) {
    out += "| " + task + " |";
    for (const auto& r : runs) {
      auto it = r.task_macro_f1.find(task);
      out += it == r.task_macro_f1.end()
                 ? " * |"
                 : " " + util::format_double(100.0 * it->second, 2) + " |";
    }
    out += "\n";
  }
  return out;
}

std::string task_comparison_csv(const std::vector<RunSummary>& runs) {
  auto rows = task_rows(runs);
  std::vector<std::string> header{"task"};
  for (const auto& r : runs) header.push_back(r.name);
  std::string out = util::csv_join(header);
  for (const auto& task : rows) {
    std::vector<std::string> row{task};
    for (const auto& r : runs) {
      auto it = r.task_macro_f1.find(task);
      row.push_back(it == r.task_macro_f1.end() ? "" : util::format_full(it->second));
    }
    out += util::csv_join(row);
  }
  return out;
}

}  // namespace citekit::cli
