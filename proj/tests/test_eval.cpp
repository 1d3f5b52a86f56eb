// Copyright 2026 The mvdid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include "mvdid/eval.hpp"
#include "mvdid/rng.hpp"
#include "support/test_util.hpp"

using mvdid::ConfusionMatrix;
using mvdid::Metrics;
using mvdid::ResultRow;

namespace {

const std::vector<std::string> kDialects{"EGY", "GLF", "LAV", "MSA", "NOR"};

std::string fixture(const std::string& name) {
  return std::string(MVDID_FIXTURE_DIR) + "/" + name;
}

ResultRow row_of(const std::string& name, std::size_t dim, double acc,
                 double prc, double rcl) {
  ResultRow r;
  r.system = name;
  r.dim = dim;
  r.metrics.accuracy = acc;
  r.metrics.macro_precision = prc;
  r.metrics.macro_recall = rcl;
  return r;
}

}  // namespace

TEST_CASE("confusion: counts match a brute-force tally") {
  const std::vector<std::string> labels{"a", "b", "c", "d"};
  mvdid::Rng rng(111);
  std::vector<std::string> truth, pred;
  std::map<std::pair<std::string, std::string>, std::uint64_t> tally;
  for (std::size_t i = 0; i < 100; ++i) {
    truth.push_back(labels[rng.below(4)]);
    pred.push_back(labels[rng.below(4)]);
    ++tally[{truth.back(), pred.back()}];
  }
  const ConfusionMatrix cm = mvdid::confusion(truth, pred, labels);
  REQUIRE(cm.labels == labels);
  CHECK(cm.total() == 100);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c)
      CHECK(cm.counts[r][c] == tally[{labels[r], labels[c]}]);
}

TEST_CASE("confusion: perfect predictions are diagonal") {
  const std::vector<std::string> truth{"x", "y", "x", "z", "y", "x"};
  const ConfusionMatrix cm = mvdid::confusion(truth, truth, {"x", "y", "z"});
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      if (r != c) CHECK(cm.counts[r][c] == 0);
  CHECK(cm.counts[0][0] == 3);
  CHECK(cm.counts[1][1] == 2);
  CHECK(cm.counts[2][2] == 1);
  const Metrics m = mvdid::metrics(cm);
  CHECK(m.accuracy == 1.0);
  CHECK(m.macro_precision == 1.0);
  CHECK(m.macro_recall == 1.0);
}

TEST_CASE("confusion: collapsed predictor fills one column") {
  const std::vector<std::string> truth{"x", "y", "x", "z", "y"};
  const std::vector<std::string> pred(5, "x");
  const ConfusionMatrix cm = mvdid::confusion(truth, pred, {"x", "y", "z"});
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 1; c < 3; ++c) CHECK(cm.counts[r][c] == 0);
  CHECK(cm.counts[0][0] == 2);
  CHECK(cm.counts[1][0] == 2);
  CHECK(cm.counts[2][0] == 1);

  // Unpredicted classes get precision 0, each with a warning; every class has
  // true samples, so no recall warnings.
  testutil::WarningCapture warnings;
  const Metrics m = mvdid::metrics(cm);
  CHECK(m.accuracy == Catch::Approx(0.4));
  CHECK(m.per_class[0].precision == Catch::Approx(0.4));
  CHECK(m.per_class[1].precision == 0.0);
  CHECK(m.per_class[2].precision == 0.0);
  CHECK(m.per_class[0].recall == 1.0);
  CHECK(m.per_class[1].recall == 0.0);
  CHECK(m.per_class[2].recall == 0.0);
  REQUIRE(warnings.messages.size() == 2);
  CHECK(warnings.messages[0].find("precision") != std::string::npos);
}

TEST_CASE("metrics: symmetric two-class matrix") {
  ConfusionMatrix cm;
  cm.labels = {"p", "q"};
  cm.counts = {{1, 1}, {1, 1}};
  const Metrics m = mvdid::metrics(cm);
  CHECK(m.accuracy == 0.5);
  CHECK(m.macro_precision == 0.5);
  CHECK(m.macro_recall == 0.5);
}

TEST_CASE("metrics: dialect reference fixture") {
  const ConfusionMatrix cm =
      mvdid::load_confusion_text(fixture("confusion_arabic_did.txt"));
  REQUIRE(cm.labels == kDialects);
  CHECK(cm.total() == 1556);
  CHECK(cm.trace() == 938);

  const Metrics m = mvdid::metrics(cm);
  CHECK(m.accuracy == Catch::Approx(938.0 / 1556.0).margin(1e-12));
  CHECK(m.per_class[0].recall == Catch::Approx(229.0 / 314.0).margin(1e-12));
  CHECK(m.per_class[0].precision == Catch::Approx(229.0 / 443.0).margin(1e-12));
  // Macro averages, derived by hand from the row/column sums.
  CHECK(m.macro_precision == Catch::Approx(0.6420930758861937).margin(1e-9));
  CHECK(m.macro_recall == Catch::Approx(0.6071673575687229).margin(1e-9));
}

TEST_CASE("metrics: simultaneous relabeling is equivariant") {
  const ConfusionMatrix cm =
      mvdid::load_confusion_text(fixture("confusion_arabic_did.txt"));
  const Metrics base = mvdid::metrics(cm);

  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  ConfusionMatrix shuffled;
  shuffled.labels.resize(5);
  shuffled.counts.assign(5, std::vector<std::uint64_t>(5, 0));
  for (std::size_t r = 0; r < 5; ++r) {
    shuffled.labels[r] = cm.labels[perm[r]];
    for (std::size_t c = 0; c < 5; ++c)
      shuffled.counts[r][c] = cm.counts[perm[r]][perm[c]];
  }
  const Metrics moved = mvdid::metrics(shuffled);
  CHECK(moved.accuracy == base.accuracy);
  CHECK(moved.macro_precision == Catch::Approx(base.macro_precision).margin(1e-15));
  CHECK(moved.macro_recall == Catch::Approx(base.macro_recall).margin(1e-15));
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(moved.per_class[k].precision == base.per_class[perm[k]].precision);
    CHECK(moved.per_class[k].recall == base.per_class[perm[k]].recall);
  }
}

TEST_CASE("report: fixed-width table marks the best accuracy") {
  const std::vector<ResultRow> rows{
      row_of("X_P", 1200, 0.4533, 0.47, 0.44),
      row_of("Z_C", 600, 0.6028, 0.6421, 0.6072),
      row_of("X_A", 400, 0.55, 0.54, 0.56)};
  const std::string table = mvdid::report(rows);

  // Header plus separator plus one line per system.
  std::istringstream in(table);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line.find("System") != std::string::npos);
  CHECK(line.find("ACC") != std::string::npos);
  REQUIRE(std::getline(in, line));
  CHECK(line.find_first_not_of('-') == std::string::npos);

  // Round-trip the numbers at two-decimal precision and locate the marker.
  std::size_t starred = 0;
  for (const ResultRow& expect : rows) {
    REQUIRE(std::getline(in, line));
    std::istringstream fields(line);
    std::string name;
    std::size_t dim = 0;
    double acc = 0.0, prc = 0.0, rcl = 0.0;
    REQUIRE((fields >> name >> dim >> acc >> prc >> rcl));
    CHECK(name == expect.system);
    CHECK(dim == expect.dim);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", expect.metrics.accuracy);
    CHECK(acc == Catch::Approx(std::stod(buf)).margin(1e-12));
    std::snprintf(buf, sizeof(buf), "%.2f", expect.metrics.macro_precision);
    CHECK(prc == Catch::Approx(std::stod(buf)).margin(1e-12));
    std::snprintf(buf, sizeof(buf), "%.2f", expect.metrics.macro_recall);
    CHECK(rcl == Catch::Approx(std::stod(buf)).margin(1e-12));
    if (line.find('*') != std::string::npos) {
      ++starred;
      CHECK(name == "Z_C");
    }
  }
  CHECK(starred == 1);

  // A single system is both the table and the best.
  const std::string solo = mvdid::report({rows[0]});
  CHECK(solo.find('*') != std::string::npos);
}

TEST_CASE("confusion text files round-trip and reject malformed input") {
  const ConfusionMatrix cm =
      mvdid::load_confusion_text(fixture("confusion_arabic_did.txt"));
  testutil::TempDir tmp("eval_confusion");
  const std::string path = tmp.str("cm.txt");
  mvdid::save_confusion_text(path, cm);
  const ConfusionMatrix back = mvdid::load_confusion_text(path);
  CHECK(back.labels == cm.labels);
  CHECK(back.counts == cm.counts);

  auto write = [&](const std::string& body) {
    std::ofstream out(tmp.str("bad.txt"), std::ios::trunc);
    out << body;
  };
  write("EGY 1 2\nGLF 3 4\n");
  CHECK_THROWS_AS(mvdid::load_confusion_text(tmp.str("bad.txt")), mvdid::Error);
  write("labels a b\nb 1 2\na 3 4\n");  // out-of-order row labels
  CHECK_THROWS_AS(mvdid::load_confusion_text(tmp.str("bad.txt")), mvdid::Error);
  write("labels a b\na 1\nb 2 3\n");  // short row
  CHECK_THROWS_AS(mvdid::load_confusion_text(tmp.str("bad.txt")), mvdid::Error);
  write("labels a b\na 1 -2\nb 2 3\n");  // negative
  CHECK_THROWS_AS(mvdid::load_confusion_text(tmp.str("bad.txt")), mvdid::Error);
  write("labels a b\na 1 x\nb 2 3\n");  // non-integer
  CHECK_THROWS_AS(mvdid::load_confusion_text(tmp.str("bad.txt")), mvdid::Error);
  write("labels a b\na 1 2\n");  // missing row
  try {
    mvdid::load_confusion_text(tmp.str("bad.txt"));
    FAIL("expected a data error");
  } catch (const mvdid::Error& e) {
    CHECK(e.kind() == mvdid::ErrorKind::Data);
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
}

TEST_CASE("results JSON is canonical and complete") {
  const ConfusionMatrix cm =
      mvdid::load_confusion_text(fixture("confusion_arabic_did.txt"));
  const std::vector<ResultRow> rows{row_of("X_P", 24, 0.52, 0.51, 0.50),
                                    row_of("Z_C", 12, 0.61, 0.60, 0.59)};
  const std::string text = mvdid::results_to_json(rows, cm, "Z_C");
  CHECK(text == mvdid::results_to_json(rows, cm, "Z_C"));

  const nlohmann::json doc = nlohmann::json::parse(text);
  REQUIRE(doc.at("systems").size() == 2);
  CHECK(doc.at("systems")[0].at("system") == "X_P");
  CHECK(doc.at("systems")[1].at("dim") == 12);
  CHECK(doc.at("systems")[1].at("acc").get<double>() == Catch::Approx(0.61));
  CHECK(doc.at("confusion").at("system") == "Z_C");
  CHECK(doc.at("confusion").at("labels").size() == 5);
  CHECK(doc.at("confusion").at("counts")[0][0] == 229);

  testutil::TempDir tmp("eval_results");
  mvdid::write_results(tmp.str("results.json"), rows, cm, "Z_C");
  std::ifstream in(tmp.str("results.json"), std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == text);
}

TEST_CASE("eval argument validation") {
  CHECK_THROWS_AS(mvdid::confusion({"a"}, {"a", "b"}, {"a", "b"}), mvdid::Error);
  CHECK_THROWS_AS(mvdid::confusion({}, {}, {"a"}), mvdid::Error);
  CHECK_THROWS_AS(mvdid::confusion({"a"}, {"a"}, {}), mvdid::Error);
  CHECK_THROWS_AS(mvdid::confusion({"z"}, {"a"}, {"a", "b"}), mvdid::Error);
  CHECK_THROWS_AS(mvdid::confusion({"a"}, {"z"}, {"a", "b"}), mvdid::Error);

  ConfusionMatrix empty;
  CHECK_THROWS_AS(mvdid::metrics(empty), mvdid::Error);
  ConfusionMatrix zeros;
  zeros.labels = {"a", "b"};
  zeros.counts = {{0, 0}, {0, 0}};
  CHECK_THROWS_AS(mvdid::metrics(zeros), mvdid::Error);
  ConfusionMatrix ragged;
  ragged.labels = {"a", "b"};
  ragged.counts = {{1, 2}};
  CHECK_THROWS_AS(mvdid::metrics(ragged), mvdid::Error);

  CHECK_THROWS_AS(mvdid::report({}), mvdid::Error);
  CHECK_THROWS_AS(mvdid::load_confusion_text("/nonexistent/cm.txt"), mvdid::Error);
}
