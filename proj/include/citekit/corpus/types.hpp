#ifndef CITEKIT_CORPUS_TYPES_HPP
#define CITEKIT_CORPUS_TYPES_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace citekit::corpus {

enum class Task { Sentiment, Intent };

enum class Domain { Movie, Product, Twitter, Scientific };

// Unified label space. Sentiment uses the first three, intent the last three.
enum class Label { Positive = 0, Negative = 1, Neutral = 2, Result = 3, Method = 4, Background = 5 };

enum class SplitHint { Train, Val, Test };

std::string task_name(Task t);
Task task_from_string(const std::string& s);
std::string domain_name(Domain d);
Domain domain_from_string(const std::string& s);
std::string label_name(Label l);
Label label_from_string(const std::string& s);

// class index within a task (Positive=0, Negative=1, Neutral=2; Result=0, Method=1, Background=2)
int label_class_index(Label l);
Label class_index_label(Task task, int index);
std::vector<std::string> class_names(Task task, int n_classes);

struct RawRecord {
  std::string text;
  std::string raw_label;
  std::string dataset_id;
  std::optional<SplitHint> split_hint;
  // verbatim source row, so cleaning can re-emit the input format
  std::vector<std::string> source_fields;  // delimited formats
  std::string source_line;                 // json-lines
};

struct HarmonizedRecord {
  std::string text;
  Label label;
  std::string dataset_id;
  Domain domain_tag;
  Task task;
  std::string normalized_key;
  std::optional<SplitHint> split_hint;
};

struct ClassAudit {
  std::string class_name;
  std::size_t original = 0;
  std::size_t removed = 0;
  std::size_t remaining = 0;
  double removed_percent = 0.0;    // removed / original, per class
  double remaining_dist = 0.0;     // remaining share of the cleaned corpus
};

struct CleaningReport {
  std::vector<ClassAudit> classes;
  std::size_t total_original = 0;
  std::size_t total_removed = 0;
  std::size_t total_remaining = 0;
  double total_removed_percent = 0.0;
};

struct ClassStat {
  std::string class_name;
  std::size_t count = 0;
  double percent = 0.0;
};

struct CorpusStats {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  std::size_t total = 0;
  std::vector<ClassStat> classes;
};

struct FoldSet {
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> folds;  // disjoint index sets, exact partition
};

struct SplitResult {
  std::vector<HarmonizedRecord> train;
  std::vector<HarmonizedRecord> val;
  std::vector<HarmonizedRecord> test;
};

}  // namespace citekit::corpus

#endif
