#include "citekit/corpus/types.hpp"

#include "citekit/util/error.hpp"
#include "citekit/util/text.hpp"

namespace citekit::corpus {

std::string task_name(Task t) {
  return t == Task::Sentiment ? "sentiment" : "intent";
}

Task task_from_string(const std::string& s) {
  auto v = util::to_lower_ascii(util::trim(s));
  if (v == "sentiment") return Task::Sentiment;
  if (v == "intent") return Task::Intent;
  throw ValidationError("unknown task: '" + s + "' (expected sentiment|intent)");
}

std::string domain_name(Domain d) {
  switch (d) {
    case Domain::Movie: return "Movie";
    case Domain::Product: return "Product";
    case Domain::Twitter: return "Twitter";
    case Domain::Scientific: return "Scientific";
  }
  return "?";
}

Domain domain_from_string(const std::string& s) {
  auto v = util::to_lower_ascii(util::trim(s));
  if (v == "movie" || v == "m") return Domain::Movie;
  if (v == "product" || v == "p") return Domain::Product;
  if (v == "twitter" || v == "t") return Domain::Twitter;
  if (v == "scientific" || v == "s") return Domain::Scientific;
  throw ValidationError("unknown domain: '" + s + "' (expected Movie|Product|Twitter|Scientific)");
}

std::string label_name(Label l) {
  switch (l) {
    case Label::Positive: return "Positive";
    case Label::Negative: return "Negative";
    case Label::Neutral: return "Neutral";
    case Label::Result: return "Result";
    case Label::Method: return "Method";
    case Label::Background: return "Background";
  }
  return "?";
}

Label label_from_string(const std::string& s) {
  auto v = util::to_lower_ascii(util::trim(s));
  if (v == "positive") return Label::Positive;
  if (v == "negative") return Label::Negative;
  if (v == "neutral") return Label::Neutral;
  if (v == "result") return Label::Result;
  if (v == "method") return Label::Method;
  if (v == "background") return Label::Background;
  throw ValidationError("unknown label: '" + s + "'");
}

int label_class_index(Label l) {
  switch (l) {
    case Label::Positive:
    case Label::Result: return 0;
    case Label::Negative:
    case Label::Method: return 1;
    case Label::Neutral:
    case Label::Background: return 2;
  }
  return -1;
}

Label class_index_label(Task task, int index) {
  static const std::array<Label, 3> sent{Label::Positive, Label::Negative, Label::Neutral};
  static const std::array<Label, 3> intent{Label::Result, Label::Method, Label::Background};
  if (index < 0 || index > 2) throw ValidationError("class index out of range");
  return task == Task::Sentiment ? sent[index] : intent[index];
}

std::vector<std::string> class_names(Task task, int n_classes) {
  std::vector<std::string> out;
  for (int i = 0; i < n_classes; ++i) out.push_back(label_name(class_index_label(task, i)));
  return out;
}

}  // namespace citekit::corpus
