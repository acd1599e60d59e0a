#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "citekit/corpus/corpus.hpp"
#include "citekit/util/error.hpp"
#include "citekit/util/io.hpp"
#include "citekit/util/text.hpp"

using namespace citekit;
using corpus::DatasetManifest;
using corpus::Domain;
using corpus::HarmonizedRecord;
using corpus::Label;
using corpus::Task;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "citekit_corpus_test";
  std::filesystem::create_directories(dir);
  return dir;
}

DatasetManifest tsv_manifest(const std::string& file_name, const std::string& content,
                             std::map<std::string, corpus::MappedLabel> label_map,
                             bool has_header = false) {
  auto path = temp_dir() / file_name;
  util::write_file(path, content);
  DatasetManifest m;
  m.dataset_id = "test";
  m.file_path = path;
  m.file_format = corpus::FileFormat::Tsv;
  m.delimiter = '\t';
  m.has_header = has_header;
  m.columns.text = std::size_t{0};
  m.columns.label = std::size_t{1};
  m.label_map = std::move(label_map);
  m.domain_tag = Domain::Product;
  m.task = Task::Sentiment;
  return m;
}

HarmonizedRecord rec(const std::string& text, Label label,
                     const std::string& dataset = "test") {
  HarmonizedRecord r;
  r.text = text;
  r.label = label;
  r.dataset_id = dataset;
  r.domain_tag = Domain::Scientific;
  r.task = Task::Sentiment;
  r.normalized_key = util::normalized_key(text);
  return r;
}

std::vector<HarmonizedRecord> n_records(std::size_t n, Label label,
                                        const std::string& prefix = "text") {
  std::vector<HarmonizedRecord> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(rec(prefix + " sample " + std::to_string(i), label));
  return out;
}

}  // namespace

TEST_CASE("ingest maps tsv columns directly") {
  auto m = tsv_manifest("basic.tsv", "great product\t5\nbroken junk\t1\n",
                        corpus::product_star_label_map());
  auto records = corpus::ingest(m);
  REQUIRE(records.size() == 2);
  CHECK(records[0].text == "great product");
  CHECK(records[0].raw_label == "5");
  CHECK(records[1].raw_label == "1");
}

TEST_CASE("ingest rejects labels without a map entry, listing them") {
  auto m = tsv_manifest("unmapped.tsv", "meh\t6\n", corpus::product_star_label_map());
  CHECK_THROWS_WITH_AS(corpus::ingest(m), doctest::Contains("'6'"), ValidationError);
}

TEST_CASE("ingest errors on a missing file") {
  DatasetManifest m;
  m.dataset_id = "ghost";
  m.file_path = temp_dir() / "does_not_exist.csv";
  m.columns.text = std::size_t{0};
  m.columns.label = std::size_t{1};
  m.label_map = corpus::product_star_label_map();
  CHECK_THROWS_AS(corpus::ingest(m), ValidationError);
}

TEST_CASE("ingest reports malformed rows with their row number") {
  auto m =
      tsv_manifest("short.tsv", "good\t5\nonly-one-column\n", corpus::product_star_label_map());
  CHECK_THROWS_WITH_AS(corpus::ingest(m), doctest::Contains("row 2"), ValidationError);

  auto m2 = tsv_manifest("empty_text.tsv", "   \t5\n", corpus::product_star_label_map());
  CHECK_THROWS_WITH_AS(corpus::ingest(m2), doctest::Contains("row 1"), ValidationError);
}

TEST_CASE("ingest honors headers, named columns and split hints") {
  auto path = temp_dir() / "named.csv";
  util::write_file(path,
                   "review,stars,split\n"
                   "\"loved it, truly\",5,train\n"
                   "terrible,1,test\n"
                   "fine,4,val\n");
  DatasetManifest m;
  m.dataset_id = "named";
  m.file_path = path;
  m.file_format = corpus::FileFormat::Csv;
  m.has_header = true;
  m.columns.text = std::string("review");
  m.columns.label = std::string("stars");
  m.columns.split = std::string("split");
  m.label_map = corpus::product_star_label_map();
  auto records = corpus::ingest(m);
  REQUIRE(records.size() == 3);
  CHECK(records[0].text == "loved it, truly");
  CHECK(records[0].split_hint == corpus::SplitHint::Train);
  CHECK(records[1].split_hint == corpus::SplitHint::Test);
  CHECK(records[2].split_hint == corpus::SplitHint::Val);
}

TEST_CASE("ingest reads json-lines with configurable field names") {
  auto path = temp_dir() / "data.jsonl";
  util::write_file(path,
                   "{\"string\":\"useful method\",\"intent\":\"method\"}\n"
                   "{\"string\":\"shows results\",\"intent\":\"result\"}\n");
  DatasetManifest m;
  m.dataset_id = "scicite";
  m.file_path = path;
  m.file_format = corpus::FileFormat::JsonLines;
  m.columns.text = std::string("string");
  m.columns.label = std::string("intent");
  m.label_map = {{"method", {false, Label::Method}},
                 {"result", {false, Label::Result}},
                 {"background", {false, Label::Background}}};
  m.task = Task::Intent;
  m.domain_tag = Domain::Scientific;
  auto records = corpus::ingest(m);
  REQUIRE(records.size() == 2);
  CHECK(records[0].text == "useful method");
  CHECK(records[0].raw_label == "method");
}

TEST_CASE("harmonize applies the product star mapping") {
  auto m = tsv_manifest("stars.tsv", "great\t5\naverage\t3\nbad\t1\n",
                        corpus::product_star_label_map());
  auto raw = corpus::ingest(m);
  auto records = corpus::harmonize(raw, m);
  REQUIRE(records.size() == 2);  // the 3-star row is dropped
  CHECK(records[0].label == Label::Positive);
  CHECK(records[1].label == Label::Negative);
  CHECK(records[0].normalized_key == "great");
}

TEST_CASE("harmonize in binary mode drops neutral") {
  auto m = tsv_manifest("neutral.tsv", "a\tpos\nb\tneu\nc\tneg\n",
                        {{"pos", {false, Label::Positive}},
                         {"neu", {false, Label::Neutral}},
                         {"neg", {false, Label::Negative}}});
  auto raw = corpus::ingest(m);
  auto ternary = corpus::harmonize(raw, m, false);
  CHECK(ternary.size() == 3);
  auto binary = corpus::harmonize(raw, m, true);
  REQUIRE(binary.size() == 2);
  CHECK(binary[0].label == Label::Positive);
  CHECK(binary[1].label == Label::Negative);
}

TEST_CASE("harmonize never invents labels") {
  auto m = tsv_manifest("image.tsv", "a\t5\nb\t4\nc\t1\nd\t2\ne\t5\n",
                        corpus::product_star_label_map());
  auto records = corpus::harmonize(corpus::ingest(m), m);
  for (const auto& r : records)
    CHECK((r.label == Label::Positive || r.label == Label::Negative));
}

TEST_CASE("dedup keeps the first of same-label duplicates") {
  std::vector<HarmonizedRecord> in{rec("Nice work", Label::Positive),
                                   rec("nice   WORK", Label::Positive),
                                   rec("other text", Label::Negative)};
  in[0].dataset_id = "first";
  in[1].dataset_id = "second";
  auto [kept, report] = corpus::dedup_clean(in);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].dataset_id == "first");
  CHECK(report.total_removed == 1);
}

TEST_CASE("dedup removes every member of a conflicting-label group") {
  std::vector<HarmonizedRecord> in{rec("ambiguous claim", Label::Positive),
                                   rec("Ambiguous Claim", Label::Negative),
                                   rec("solid", Label::Positive)};
  auto [kept, report] = corpus::dedup_clean(in);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].text == "solid");
  CHECK(report.total_removed == 2);
}

TEST_CASE("dedup is idempotent and leaves no duplicate keys") {
  std::vector<HarmonizedRecord> in;
  for (int i = 0; i < 40; ++i)
    in.push_back(rec("text " + std::to_string(i % 13), Label::Positive));
  auto [once, r1] = corpus::dedup_clean(in);
  auto [twice, r2] = corpus::dedup_clean(once);
  CHECK(once.size() == twice.size());
  CHECK(r2.total_removed == 0);
  std::set<std::string> keys;
  for (const auto& r : once) CHECK(keys.insert(r.normalized_key).second);
}

TEST_CASE("cleaning report conserves counts per class and in total") {
  // planted: 3 same-label duplicate groups and 2 conflicting pairs
  std::vector<HarmonizedRecord> in;
  in.push_back(rec("dup a", Label::Positive));
  in.push_back(rec("dup a", Label::Positive));
  in.push_back(rec("dup b", Label::Neutral));
  in.push_back(rec("dup b", Label::Neutral));
  in.push_back(rec("dup c", Label::Negative));
  in.push_back(rec("dup c", Label::Negative));
  in.push_back(rec("conflict a", Label::Positive));
  in.push_back(rec("conflict a", Label::Negative));
  in.push_back(rec("conflict b", Label::Neutral));
  in.push_back(rec("conflict b", Label::Negative));
  for (int i = 0; i < 5; ++i) in.push_back(rec("unique " + std::to_string(i), Label::Positive));

  auto [kept, report] = corpus::dedup_clean(in);
  CHECK(report.total_original == in.size());
  CHECK(report.total_remaining == kept.size());
  std::size_t removed_sum = 0, remaining_sum = 0;
  for (const auto& c : report.classes) {
    CHECK(c.remaining == c.original - c.removed);
    removed_sum += c.removed;
    remaining_sum += c.remaining;
  }
  CHECK(removed_sum == report.total_removed);
  CHECK(remaining_sum == report.total_remaining);
  CHECK(report.total_removed == 3 + 4);
}

TEST_CASE("split honors exact ratio arithmetic") {
  auto records = n_records(10, Label::Positive);
  auto result = corpus::split(records, {0.7, 0.0, 0.3}, 11, false);
  CHECK(result.train.size() == 7);
  CHECK(result.val.size() == 0);
  CHECK(result.test.size() == 3);
}

TEST_CASE("split is deterministic and an exact partition") {
  auto records = n_records(137, Label::Positive);
  auto a = corpus::split(records, {0.6, 0.2, 0.2}, 5, false);
  auto b = corpus::split(records, {0.6, 0.2, 0.2}, 5, false);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train[i].text == b.train[i].text);

  std::multiset<std::string> seen, expected;
  for (const auto* part : {&a.train, &a.val, &a.test})
    for (const auto& r : *part) seen.insert(r.text);
  for (const auto& r : records) expected.insert(r.text);
  CHECK(seen == expected);
}

TEST_CASE("an 80/20 carve of 24,904 records allocates 19,923 plus 4,981") {
  auto records = n_records(24904, Label::Positive);
  auto result = corpus::split(records, {0.8, 0.2, 0.0}, 9, false);
  CHECK(result.train.size() == 19923);
  CHECK(result.val.size() == 4981);
}

TEST_CASE("split allocates exact counts from rational ratios on 981 records") {
  // 981 records at ratios (797/981, 89/981, 95/981)
  auto records = n_records(728, Label::Positive);
  auto neg = n_records(253, Label::Negative, "negative");
  records.insert(records.end(), neg.begin(), neg.end());
  REQUIRE(records.size() == 981);
  auto result = corpus::split(records, {797.0 / 981.0, 89.0 / 981.0, 95.0 / 981.0}, 3, true);
  CHECK(result.train.size() == 797);
  CHECK(result.val.size() == 89);
  CHECK(result.test.size() == 95);
}

TEST_CASE("stratified split keeps class shares within one record") {
  auto records = n_records(90, Label::Positive);
  auto minority = n_records(10, Label::Negative, "minority");
  records.insert(records.end(), minority.begin(), minority.end());
  auto result = corpus::split(records, {0.7, 0.1, 0.2}, 17, true);

  auto count_neg = [](const std::vector<HarmonizedRecord>& v) {
    return static_cast<double>(std::count_if(
        v.begin(), v.end(), [](const auto& r) { return r.label == Label::Negative; }));
  };
  CHECK(std::abs(count_neg(result.train) - 7.0) <= 1.0);
  CHECK(std::abs(count_neg(result.val) - 1.0) <= 1.0);
  CHECK(std::abs(count_neg(result.test) - 2.0) <= 1.0);
}

TEST_CASE("stratified split rejects classes smaller than the split count") {
  auto records = n_records(50, Label::Positive);
  records.push_back(rec("single negative", Label::Negative));
  CHECK_THROWS_AS(corpus::split(records, {0.7, 0.1, 0.2}, 1, true), ValidationError);
}

TEST_CASE("split validates ratios") {
  auto records = n_records(10, Label::Positive);
  CHECK_THROWS_AS(corpus::split(records, {0.5, 0.2, 0.2}, 1, false), ValidationError);
  CHECK_THROWS_AS(corpus::split(records, {1.2, -0.1, -0.1}, 1, false), ValidationError);
}

TEST_CASE("stats computes class distributions to two-decimal precision") {
  auto records = n_records(728, Label::Positive);
  auto neg = n_records(253, Label::Negative, "neg");
  records.insert(records.end(), neg.begin(), neg.end());
  auto s = corpus::stats(records);
  REQUIRE(s.classes.size() == 2);
  CHECK(s.classes[0].class_name == "Positive");
  CHECK(s.classes[0].percent == doctest::Approx(74.21).epsilon(1e-4));
  CHECK(s.classes[1].percent == doctest::Approx(25.79).epsilon(1e-4));

  // intent corpus: Result 1,491 of 11,020 = 13.53%
  std::vector<HarmonizedRecord> intent;
  auto add = [&](std::size_t n, Label l) {
    for (std::size_t i = 0; i < n; ++i) {
      auto r = rec("i " + corpus::label_name(l) + std::to_string(i), l);
      r.task = Task::Intent;
      intent.push_back(r);
    }
  };
  add(1491, Label::Result);
  add(3154, Label::Method);
  add(6375, Label::Background);
  auto si = corpus::stats(intent);
  CHECK(si.total == 11020);
  CHECK(si.classes[0].class_name == "Result");
  CHECK(si.classes[0].count == 1491);
  CHECK(si.classes[0].percent == doctest::Approx(13.53).epsilon(1e-3));
}

TEST_CASE("stats on a single record gives 100 percent") {
  auto s = corpus::stats({rec("only one", Label::Negative)});
  REQUIRE(s.classes.size() == 1);
  CHECK(s.classes[0].percent == doctest::Approx(100.0));
}

TEST_CASE("stats percentages sum to 100 and empty input errors") {
  auto records = n_records(37, Label::Positive);
  auto more = n_records(11, Label::Negative, "x");
  auto neu = n_records(7, Label::Neutral, "y");
  records.insert(records.end(), more.begin(), more.end());
  records.insert(records.end(), neu.begin(), neu.end());
  auto s = corpus::stats(records);
  double sum = 0;
  for (const auto& c : s.classes) sum += c.percent;
  CHECK(sum == doctest::Approx(100.0).epsilon(1e-4));
  CHECK_THROWS_AS(corpus::stats(std::vector<HarmonizedRecord>{}), ValidationError);
}

TEST_CASE("make_folds produces singletons when k equals the count") {
  auto records = n_records(10, Label::Positive);
  auto folds = corpus::make_folds(records, 10, 1, false);
  CHECK(folds.k == 10);
  for (const auto& f : folds.folds) CHECK(f.size() == 1);
}

TEST_CASE("make_folds on 981 records gives sizes in {98, 99} and an exact partition") {
  auto records = n_records(981, Label::Positive);
  auto folds = corpus::make_folds(records, 10, 2, false);
  std::set<std::size_t> seen;
  for (const auto& f : folds.folds) {
    CHECK((f.size() == 98 || f.size() == 99));
    for (auto i : f) CHECK(seen.insert(i).second);  // disjoint
  }
  CHECK(seen.size() == 981);  // union covers everything
  CHECK(*seen.rbegin() == 980);
}

TEST_CASE("stratified folds spread the minority class exactly") {
  auto records = n_records(90, Label::Positive);
  auto minority = n_records(10, Label::Negative, "m");
  records.insert(records.end(), minority.begin(), minority.end());
  auto folds = corpus::make_folds(records, 5, 7, true);
  for (const auto& f : folds.folds) {
    std::size_t neg = 0;
    for (auto i : f)
      if (records[i].label == Label::Negative) ++neg;
    CHECK(neg == 2);  // exhaustive count over folds
    CHECK(f.size() == 20);
  }
}

TEST_CASE("make_folds is deterministic per seed and validates k") {
  auto records = n_records(30, Label::Positive);
  auto a = corpus::make_folds(records, 4, 9, false);
  auto b = corpus::make_folds(records, 4, 9, false);
  CHECK(a.folds == b.folds);
  CHECK_THROWS_AS(corpus::make_folds(records, 31, 1, false), ValidationError);
  CHECK_THROWS_AS(corpus::make_folds(records, 1, 1, false), ValidationError);
}

TEST_CASE("fold sizes stay within one of each other when stratified") {
  // two classes, both with remainders, to exercise the extra-fold rotation
  auto records = n_records(47, Label::Positive);
  auto neg = n_records(23, Label::Negative, "n");
  records.insert(records.end(), neg.begin(), neg.end());
  auto folds = corpus::make_folds(records, 6, 3, true);
  std::size_t lo = SIZE_MAX, hi = 0;
  std::set<std::size_t> seen;
  for (const auto& f : folds.folds) {
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
    for (auto i : f) CHECK(seen.insert(i).second);
  }
  CHECK(hi - lo <= 1);
  CHECK(seen.size() == 70);
}

TEST_CASE("prepare_dataset carves a validation split out of hinted train data") {
  std::string content;
  for (int i = 0; i < 10; ++i) content += "train text " + std::to_string(i) + "\t5\ttrain\n";
  for (int i = 0; i < 4; ++i) content += "test text " + std::to_string(i) + "\t1\ttest\n";
  auto m = tsv_manifest("hinted.tsv", content, corpus::product_star_label_map());
  m.columns.split = std::size_t{2};
  m.split_ratios = {0.8, 0.2, 0.0};
  m.stratified = false;
  auto prepared = corpus::prepare_dataset(m, true, 5);
  CHECK(prepared.splits.train.size() == 8);
  CHECK(prepared.splits.val.size() == 2);
  CHECK(prepared.splits.test.size() == 4);
}

TEST_CASE("prepare_dataset catches duplicates that span splits") {
  std::string content =
      "same citation sentence\tpos\ttrain\n"
      "Same   Citation Sentence\tneg\ttest\n"
      "another one\tpos\ttrain\n";
  auto m = tsv_manifest("cross_split.tsv", content,
                        {{"pos", {false, Label::Positive}}, {"neg", {false, Label::Negative}}});
  m.columns.split = std::size_t{2};
  auto prepared = corpus::prepare_dataset(m, true, 5);
  CHECK(prepared.cleaning.total_removed == 2);
  CHECK(prepared.splits.train.size() + prepared.splits.val.size() +
            prepared.splits.test.size() ==
        1);
}

TEST_CASE("cleaning report renders the audit table") {
  std::vector<HarmonizedRecord> in{rec("dup", Label::Positive), rec("dup", Label::Positive),
                                   rec("solo", Label::Negative)};
  auto [kept, report] = corpus::dedup_clean(in);
  auto csv = corpus::cleaning_report_csv(report);
  CHECK(csv.find("class,original,clean,distribution_percent,removed,removed_percent") !=
        std::string::npos);
  CHECK(csv.find("TOTAL") != std::string::npos);
  auto md = corpus::cleaning_report_markdown(report);
  CHECK(md.find("| Classes |") != std::string::npos);
  CHECK(md.find("| Positive | 2 | 1 |") != std::string::npos);
}

TEST_CASE("manifest json parsing round trip") {
  auto data_path = temp_dir() / "mj.tsv";
  util::write_file(data_path, "good\t5\n");
  std::string json_text = R"({
    "dataset_id": "instruments",
    "file_path": "mj.tsv",
    "file_format": "tsv",
    "columns": {"text": 0, "label": 1},
    "star_labels": true,
    "domain": "Product",
    "task": "sentiment",
    "has_header": false,
    "split_ratios": [0.8, 0.1, 0.1]
  })";
  auto m = corpus::parse_manifest_json(json_text, temp_dir());
  CHECK(m.dataset_id == "instruments");
  CHECK(m.label_map.size() == 5);
  CHECK(m.label_map.at("3").drop);
  CHECK(m.domain_tag == Domain::Product);
  CHECK_FALSE(m.stratified_or_default());  // stratified defaults off outside Scientific
  auto records = corpus::ingest(m);
  CHECK(records.size() == 1);
}

TEST_CASE("manifest validation failures") {
  CHECK_THROWS_AS(corpus::parse_manifest_json("{not json", "."), ValidationError);
  CHECK_THROWS_AS(corpus::parse_manifest_json(R"({"dataset_id":"x"})", "."), ValidationError);
  // intent labels on a sentiment task
  CHECK_THROWS_AS(corpus::parse_manifest_json(R"({
    "dataset_id":"x", "file_path":"f.csv", "file_format":"csv",
    "columns":{"text":0,"label":1}, "label_map":{"a":"method"},
    "domain":"Movie", "task":"sentiment"})", "."),
                  ValidationError);
}
