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

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvdid/error.hpp"

namespace mvdid {

// Scoring: confusion matrix (rows = truth, columns = prediction), accuracy,
// and macro-averaged precision/recall, plus the fixed-width comparison table
// and a machine-readable results file. Macro averaging weights every class
// equally regardless of its support.

struct ConfusionMatrix {
  std::vector<std::string> labels;                 // ordered
  std::vector<std::vector<std::uint64_t>> counts;  // C x C

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& row : counts)
      for (const std::uint64_t v : row) t += v;
    return t;
  }
  std::uint64_t trace() const {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
    return t;
  }
};

struct PerClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
};

struct Metrics {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  std::vector<PerClassMetrics> per_class;
};

// One comparison-table row: a system name, its representation dimensionality,
// and its metrics.
struct ResultRow {
  std::string system;
  std::size_t dim = 0;
  Metrics metrics;
};

namespace detail {

inline std::size_t label_position(const std::vector<std::string>& label_set,
                                  const std::string& label, const char* who) {
  for (std::size_t i = 0; i < label_set.size(); ++i)
    if (label_set[i] == label) return i;
  throw_data(std::string(who) + ": label \"" + label +
             "\" is not in the label set");
}

inline void check_confusion(const ConfusionMatrix& cm, const char* who) {
  const std::size_t c = cm.labels.size();
  if (c == 0) throw_data(std::string(who) + ": empty confusion matrix");
  if (cm.counts.size() != c)
    throw_dim(std::string(who) + ": counts rows do not match label count");
  for (const auto& row : cm.counts)
    if (row.size() != c)
      throw_dim(std::string(who) + ": counts columns do not match label count");
}

}  // namespace detail

// Tally per-(truth, prediction) counts over the given label set.
inline ConfusionMatrix confusion(const std::vector<std::string>& truth,
                                 const std::vector<std::string>& pred,
                                 const std::vector<std::string>& label_set) {
  if (truth.size() != pred.size())
    throw_dim("confusion: truth and prediction lengths differ");
  if (truth.empty()) throw_data("confusion: need at least one pair");
  if (label_set.empty()) throw_data("confusion: empty label set");
  ConfusionMatrix cm;
  cm.labels = label_set;
  cm.counts.assign(label_set.size(),
                   std::vector<std::uint64_t>(label_set.size(), 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::size_t r = detail::label_position(label_set, truth[i], "confusion");
    const std::size_t c = detail::label_position(label_set, pred[i], "confusion");
    ++cm.counts[r][c];
  }
  return cm;
}

// Accuracy is trace/total; per-class precision and recall divide the diagonal
// by column and row sums. A class never predicted has precision 0 (and one
// never present has recall 0), each flagged through the warning handler so
// the 0 is visibly a definition, not a measurement.
inline Metrics metrics(const ConfusionMatrix& cm) {
  detail::check_confusion(cm, "metrics");
  const std::uint64_t total = cm.total();
  if (total == 0) throw_data("metrics: confusion matrix has no counts");
  const std::size_t c = cm.labels.size();

  Metrics m;
  m.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  m.per_class.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    std::uint64_t row_sum = 0, col_sum = 0;
    for (std::size_t j = 0; j < c; ++j) {
      row_sum += cm.counts[k][j];
      col_sum += cm.counts[j][k];
    }
    const double diag = static_cast<double>(cm.counts[k][k]);
    if (col_sum == 0)
      warn("metrics: no predictions for label \"" + cm.labels[k] +
           "\"; precision reported as 0");
    if (row_sum == 0)
      warn("metrics: no true samples for label \"" + cm.labels[k] +
           "\"; recall reported as 0");
    m.per_class[k].precision =
        col_sum == 0 ? 0.0 : diag / static_cast<double>(col_sum);
    m.per_class[k].recall =
        row_sum == 0 ? 0.0 : diag / static_cast<double>(row_sum);
    m.macro_precision += m.per_class[k].precision;
    m.macro_recall += m.per_class[k].recall;
  }
  m.macro_precision /= static_cast<double>(c);
  m.macro_recall /= static_cast<double>(c);
  return m;
}

// Fixed-width comparison table: one row per system with dimensionality and
// ACC/PRC/RCL at two decimals; every row tied for best accuracy is marked
// with an asterisk.
inline std::string report(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw_data("report: no systems to report");
  std::size_t name_w = 6;  // "System"
  for (const ResultRow& r : rows) name_w = std::max(name_w, r.system.size());
  name_w += 2;

  double best = rows.front().metrics.accuracy;
  for (const ResultRow& r : rows) best = std::max(best, r.metrics.accuracy);

  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s %6s %6s %6s %6s\n",
                static_cast<int>(name_w), "System", "Dim", "ACC", "PRC",
                "RCL");
  out += line;
  out += std::string(name_w + 1 + 4 * 7, '-') + "\n";
  for (const ResultRow& r : rows) {
    std::snprintf(line, sizeof(line), "%-*s %6zu %6.2f %6.2f %6.2f%s\n",
                  static_cast<int>(name_w), r.system.c_str(), r.dim,
                  r.metrics.accuracy, r.metrics.macro_precision,
                  r.metrics.macro_recall,
                  r.metrics.accuracy == best ? "  *" : "");
    out += line;
  }
  return out;
}

// Plain-text confusion matrix: a "labels ..." header line, then one line per
// true class, led by its label, in label-set order.
inline void save_confusion_text(const std::string& path,
                                const ConfusionMatrix& cm) {
  detail::check_confusion(cm, "save_confusion_text");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_data("save_confusion_text: cannot open " + path);
  out << "labels";
  for (const std::string& l : cm.labels) out << ' ' << l;
  out << '\n';
  for (std::size_t r = 0; r < cm.labels.size(); ++r) {
    out << cm.labels[r];
    for (const std::uint64_t v : cm.counts[r]) out << ' ' << v;
    out << '\n';
  }
  if (!out.flush()) throw_data("save_confusion_text: write failed for " + path);
}

inline ConfusionMatrix load_confusion_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("load_confusion_text: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw_data(path + ":1: expected a \"labels\" header line");
  std::istringstream header(line);
  std::string tok;
  header >> tok;
  if (tok != "labels")
    throw_data(path + ":1: expected the line to start with \"labels\"");
  ConfusionMatrix cm;
  while (header >> tok) cm.labels.push_back(tok);
  if (cm.labels.empty()) throw_data(path + ":1: no labels listed");

  const std::size_t c = cm.labels.size();
  for (std::size_t r = 0; r < c; ++r) {
    const std::string where = path + ":" + std::to_string(r + 2) + ": ";
    if (!std::getline(in, line))
      throw_data(where + "missing row for label \"" + cm.labels[r] + "\"");
    std::istringstream row(line);
    if (!(row >> tok) || tok != cm.labels[r])
      throw_data(where + "expected row label \"" + cm.labels[r] + "\"");
    std::vector<std::uint64_t> counts;
    long long v = 0;
    while (row >> v) {
      if (v < 0) throw_data(where + "negative count");
      counts.push_back(static_cast<std::uint64_t>(v));
    }
    if (!row.eof()) throw_data(where + "non-integer count");
    if (counts.size() != c)
      throw_data(where + "expected " + std::to_string(c) + " counts, got " +
                 std::to_string(counts.size()));
    cm.counts.push_back(std::move(counts));
  }
  return cm;
}

// Machine-readable results: the table rows plus the full confusion matrix of
// the best-accuracy system, as canonical JSON (sorted keys, 2-space indent),
// so identical runs serialize byte-identically.
inline std::string results_to_json(const std::vector<ResultRow>& rows,
                                   const ConfusionMatrix& best_confusion,
                                   const std::string& best_system) {
  if (rows.empty()) throw_data("results_to_json: no systems");
  detail::check_confusion(best_confusion, "results_to_json");
  nlohmann::json doc;
  doc["systems"] = nlohmann::json::array();
  for (const ResultRow& r : rows) {
    nlohmann::json row;
    row["system"] = r.system;
    row["dim"] = r.dim;
    row["acc"] = r.metrics.accuracy;
    row["prc"] = r.metrics.macro_precision;
    row["rcl"] = r.metrics.macro_recall;
    doc["systems"].push_back(row);
  }
  doc["confusion"]["system"] = best_system;
  doc["confusion"]["labels"] = best_confusion.labels;
  doc["confusion"]["counts"] = best_confusion.counts;
  return doc.dump(2) + "\n";
}

inline void write_results(const std::string& path,
                          const std::vector<ResultRow>& rows,
                          const ConfusionMatrix& best_confusion,
                          const std::string& best_system) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw_data("write_results: cannot open " + path);
  out << results_to_json(rows, best_confusion, best_system);
  if (!out.flush()) throw_data("write_results: write failed for " + path);
}

}  // namespace mvdid
