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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mvdid/corpus.hpp"
#include "mvdid/error.hpp"
#include "mvdid/matrix.hpp"
#include "mvdid/numerics.hpp"

namespace mvdid {

// Phonotactic vector space: phone n-gram counts per utterance, factored by a
// truncated SVD; utterances are represented by their projection onto the
// retained right-singular subspace.

namespace detail {

constexpr char kNgramSep = '\x1f';  // unit separator; joins phones into one key

inline std::string ngram_key(const std::vector<std::string>& phones, std::size_t start,
                             std::size_t order) {
  std::string key;
  for (std::size_t i = 0; i < order; ++i) {
    const std::string& p = phones[start + i];
    if (p.find(kNgramSep) != std::string::npos)
      throw_data("phone symbol contains the reserved separator byte 0x1f: '" + p + "'");
    if (i) key += kNgramSep;
    key += p;
  }
  return key;
}

// FNV-1a over the column-ordered terms; identifies a vocabulary so counts
// and projectors built against different vocabularies cannot be mixed up.
inline std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

struct NgramVocab {
  std::set<std::size_t> orders;    // n-gram orders included (default {2,3})
  std::vector<std::string> terms;  // column id -> joined key
  std::map<std::string, std::uint32_t> index;  // joined key -> column id
  std::uint64_t vocab_id = 0;

  std::size_t size() const { return terms.size(); }
};

// Sparse per-utterance n-gram counts: (column, count) pairs, columns ascending.
using SparseCounts = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

struct TermDocMatrix {
  std::size_t n_cols = 0;
  std::uint64_t vocab_id = 0;
  std::vector<SparseCounts> rows;

  std::size_t n_rows() const { return rows.size(); }
};

struct PhonotacticProjector {
  Matrix pi;               // d x k, orthonormal columns
  Vector singular_values;  // length k, descending
  std::size_t k = 0;
  bool log_counts = false;  // weight entries as log(1 + count)
  bool center = false;      // subtract training column means before projecting
  Vector mean;              // length d when center is set, else empty
  std::uint64_t vocab_id = 0;
};

inline NgramVocab build_vocab(const Dataset& d, const std::set<std::size_t>& orders = {2, 3},
                              std::size_t max_terms = 8000) {
  if (d.records.empty()) throw_data("build_vocab: empty corpus");
  if (max_terms < 1) throw_data("build_vocab: max_terms must be >= 1");
  if (orders.empty()) throw_data("build_vocab: need at least one n-gram order");
  for (const std::size_t o : orders)
    if (o < 1) throw_data("build_vocab: n-gram orders must be >= 1");

  std::map<std::string, std::uint64_t> freq;
  for (const auto& r : d.records) {
    if (r.phones.empty())
      throw_data("build_vocab: record '" + r.id + "' has no phone sequence");
    for (const std::size_t o : orders) {
      if (r.phones.size() < o) continue;
      for (std::size_t i = 0; i + o <= r.phones.size(); ++i)
        ++freq[detail::ngram_key(r.phones, i, o)];
    }
  }
  if (freq.empty()) throw_data("build_vocab: corpus contains no n-grams of the requested orders");

  std::vector<std::pair<std::string, std::uint64_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;  // frequency, descending
    return a.first < b.first;                              // then lexicographic
  });
  if (ranked.size() > max_terms) ranked.resize(max_terms);

  NgramVocab v;
  v.orders = orders;
  std::uint64_t id_hash = 0xcbf29ce484222325ULL;
  for (std::size_t col = 0; col < ranked.size(); ++col) {
    v.terms.push_back(ranked[col].first);
    v.index.emplace(ranked[col].first, static_cast<std::uint32_t>(col));
    id_hash = detail::fnv1a64(ranked[col].first + '\0', id_hash);
  }
  v.vocab_id = id_hash;
  return v;
}

inline SparseCounts count_ngrams(const std::vector<std::string>& phones, const NgramVocab& v) {
  std::map<std::uint32_t, std::uint32_t> acc;
  for (const std::size_t o : v.orders) {
    if (phones.size() < o) continue;
    for (std::size_t i = 0; i + o <= phones.size(); ++i) {
      const auto it = v.index.find(detail::ngram_key(phones, i, o));
      if (it != v.index.end()) ++acc[it->second];
    }
  }
  return SparseCounts(acc.begin(), acc.end());
}

inline TermDocMatrix count_matrix(const Dataset& d, const NgramVocab& v) {
  TermDocMatrix x;
  x.n_cols = v.size();
  x.vocab_id = v.vocab_id;
  x.rows.reserve(d.records.size());
  for (const auto& r : d.records) x.rows.push_back(count_ngrams(r.phones, v));
  return x;
}

namespace detail {

inline double weight_count(std::uint32_t count, bool log_counts) {
  return log_counts ? std::log1p(static_cast<double>(count)) : static_cast<double>(count);
}

inline Matrix dense_counts(const TermDocMatrix& x, bool log_counts) {
  Matrix m(x.n_rows(), x.n_cols);
  for (std::size_t i = 0; i < x.rows.size(); ++i)
    for (const auto& [col, count] : x.rows[i]) m(i, col) = weight_count(count, log_counts);
  return m;
}

}  // namespace detail

inline PhonotacticProjector fit_projector(const TermDocMatrix& x, std::size_t k,
                                          bool log_counts = false, bool center = false) {
  if (x.n_rows() == 0 || x.n_cols == 0) throw_data("fit_projector: empty term-document matrix");
  if (k < 1 || k > std::min(x.n_rows(), x.n_cols))
    throw_dim("fit_projector: k=" + std::to_string(k) + " outside 1..min(N,d)=" +
              std::to_string(std::min(x.n_rows(), x.n_cols)));

  Matrix dense = detail::dense_counts(x, log_counts);
  PhonotacticProjector p;
  if (center) {
    p.mean = column_means(dense);
    dense = subtract_row_vector(dense, p.mean);
  }
  const SvdResult svd = truncated_svd(dense, k);
  p.pi = svd.v;
  p.singular_values = svd.s;
  p.k = k;
  p.log_counts = log_counts;
  p.center = center;
  p.vocab_id = x.vocab_id;
  return p;
}

// Project one sparse count row onto the retained subspace.
inline Vector project_counts(const SparseCounts& counts, const PhonotacticProjector& p) {
  Vector out(p.k, 0.0);
  for (const auto& [col, count] : counts) {
    if (col >= p.pi.rows()) throw_dim("project_counts: column id exceeds projector width");
    const double w = detail::weight_count(count, p.log_counts);
    for (std::size_t j = 0; j < p.k; ++j) out[j] += w * p.pi(col, j);
  }
  if (p.center)
    for (std::size_t j = 0; j < p.k; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < p.pi.rows(); ++i) m += p.mean[i] * p.pi(i, j);
      out[j] -= m;
    }
  return out;
}

inline Matrix project(const TermDocMatrix& x, const PhonotacticProjector& p) {
  if (x.vocab_id != p.vocab_id)
    throw_data("project: term-document matrix and projector use different vocabularies");
  if (x.n_cols != p.pi.rows())
    throw_dim("project: column count " + std::to_string(x.n_cols) + " != projector rows " +
              std::to_string(p.pi.rows()));
  // Projected mean, computed once when centering.
  Vector mean_proj;
  if (p.center) {
    mean_proj.assign(p.k, 0.0);
    for (std::size_t i = 0; i < p.pi.rows(); ++i)
      for (std::size_t j = 0; j < p.k; ++j) mean_proj[j] += p.mean[i] * p.pi(i, j);
  }
  Matrix out(x.n_rows(), p.k);
  for (std::size_t r = 0; r < x.rows.size(); ++r) {
    for (const auto& [col, count] : x.rows[r]) {
      const double w = detail::weight_count(count, p.log_counts);
      for (std::size_t j = 0; j < p.k; ++j) out(r, j) += w * p.pi(col, j);
    }
    if (p.center)
      for (std::size_t j = 0; j < p.k; ++j) out(r, j) -= mean_proj[j];
  }
  return out;
}

}  // namespace mvdid
