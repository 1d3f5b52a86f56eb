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
#include <string>
#include <vector>

#include "mvdid/error.hpp"
#include "mvdid/matrix.hpp"
#include "mvdid/numerics.hpp"

namespace mvdid {

// Supervised post-processing of a vector space: LDA projects to at most C-1
// directions maximizing between-class over within-class scatter, and WCCN
// whitens the pooled within-class covariance so that Euclidean geometry in
// the final space discounts directions of high intra-class variability.
//
// Scatter matrices weight every sample equally (pooled 1/N normalization), so
// imbalanced classes influence S_w and S_b in proportion to their size.

struct LdaModel {
  Matrix w;            // D x m projection, generalized eigenvalue order
  std::size_t m = 0;   // <= C - 1
  Matrix class_means;  // C x D
  Vector global_mean;  // D
  double ridge = 0.0;
};

struct WccnModel {
  Matrix b;  // m x m lower-triangular, b b^T = (W_within + ridge I)^{-1}
  double ridge = 0.0;
};

namespace detail {

struct Scatter {
  Matrix s_w;          // pooled within-class covariance, 1/N
  Matrix s_b;          // between-class covariance of class means, n_c/N
  Matrix class_means;  // C x D
  Vector global_mean;  // D
  std::vector<std::size_t> counts;  // per-class sample counts
};

// Labels are class indices; C is inferred as max+1 and every class in [0, C)
// must supply at least two samples — with fewer, its within-class scatter is
// zero or undefined and the fit is degenerate.
inline Scatter scatter_matrices(const Matrix& x,
                                const std::vector<std::size_t>& labels,
                                const char* who) {
  const std::size_t n = x.rows(), d = x.cols();
  if (labels.size() != n)
    throw_dim(std::string(who) + ": labels length does not match row count");
  if (n < 2) throw_data(std::string(who) + ": need at least 2 rows");
  std::size_t n_classes = 0;
  for (std::size_t c : labels) n_classes = std::max(n_classes, c + 1);

  Scatter s;
  s.counts.assign(n_classes, 0);
  for (std::size_t c : labels) ++s.counts[c];
  for (std::size_t c = 0; c < n_classes; ++c)
    if (s.counts[c] < 2)
      throw_data(std::string(who) + ": class " + std::to_string(c) + " has " +
                 std::to_string(s.counts[c]) + " sample(s); need >= 2");

  s.class_means = Matrix(n_classes, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) s.class_means(labels[i], j) += x(i, j);
  for (std::size_t c = 0; c < n_classes; ++c)
    for (std::size_t j = 0; j < d; ++j)
      s.class_means(c, j) /= static_cast<double>(s.counts[c]);

  s.global_mean = column_means(x);

  s.s_w = Matrix(d, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a) {
      const double da = x(i, a) - s.class_means(labels[i], a);
      if (da == 0.0) continue;
      for (std::size_t b = a; b < d; ++b)
        s.s_w(a, b) += da * (x(i, b) - s.class_means(labels[i], b));
    }
  s.s_b = Matrix(d, d);
  for (std::size_t c = 0; c < n_classes; ++c)
    for (std::size_t a = 0; a < d; ++a) {
      const double da = s.class_means(c, a) - s.global_mean[a];
      for (std::size_t b = a; b < d; ++b)
        s.s_b(a, b) += static_cast<double>(s.counts[c]) * da *
                       (s.class_means(c, b) - s.global_mean[b]);
    }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      s.s_w(a, b) *= inv_n;
      s.s_w(b, a) = s.s_w(a, b);
      s.s_b(a, b) *= inv_n;
      s.s_b(b, a) = s.s_b(a, b);
    }
  return s;
}

}  // namespace detail

// Top-m discriminant directions: eigenvectors of (S_w + ridge I)^{-1} S_b,
// computed through the symmetric similarity (S_w + ridge I)^{-1/2} S_b
// (S_w + ridge I)^{-1/2} so the solver stays symmetric; the spectrum is
// identical. Directions satisfy w_j^T (S_w + ridge I) w_j = 1.
inline LdaModel fit_lda(const Matrix& x, const std::vector<std::size_t>& labels,
                        std::size_t m, double ridge = kDefaultRidge) {
  if (ridge < 0.0) throw_data("fit_lda: ridge must be >= 0");
  const detail::Scatter s = detail::scatter_matrices(x, labels, "fit_lda");
  const std::size_t n_classes = s.counts.size();
  if (n_classes < 2) throw_data("fit_lda: need at least 2 classes");
  if (m < 1 || m > n_classes - 1)
    throw_dim("fit_lda: m=" + std::to_string(m) +
              " out of range [1, C-1] = [1, " + std::to_string(n_classes - 1) +
              "]");
  if (m > x.cols())
    throw_dim("fit_lda: m exceeds the feature dimension " +
              std::to_string(x.cols()));

  const Matrix w_half = inv_sqrt_psd(s.s_w, ridge);
  const EigResult eig = sym_eig(w_half * s.s_b * w_half);
  Matrix top(x.cols(), m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < x.cols(); ++i) top(i, j) = eig.vectors(i, j);

  LdaModel model;
  model.w = w_half * top;
  model.m = m;
  model.class_means = s.class_means;
  model.global_mean = s.global_mean;
  model.ridge = ridge;
  return model;
}

inline Matrix transform_lda(const LdaModel& model, const Matrix& x) {
  if (x.cols() != model.w.rows())
    throw_dim("transform_lda: input has " + std::to_string(x.cols()) +
              " columns; model expects " + std::to_string(model.w.rows()));
  return subtract_row_vector(x, model.global_mean) * model.w;
}

// Whitening transform for the pooled within-class covariance: the
// lower-triangular b with b b^T = (W + ridge I)^{-1}, so that transformed
// training data has identity within-class covariance (b^T W b = I).
inline WccnModel fit_wccn(const Matrix& x,
                          const std::vector<std::size_t>& labels,
                          double ridge = kDefaultRidge) {
  if (ridge < 0.0) throw_data("fit_wccn: ridge must be >= 0");
  const detail::Scatter s = detail::scatter_matrices(x, labels, "fit_wccn");
  Matrix w = s.s_w;
  for (std::size_t i = 0; i < w.rows(); ++i) w(i, i) += ridge;
  WccnModel model;
  model.b = detail::cholesky_lower(detail::invert_spd(w, "fit_wccn"),
                                   "fit_wccn");
  model.ridge = ridge;
  return model;
}

inline Matrix transform_wccn(const WccnModel& model, const Matrix& x) {
  if (x.cols() != model.b.rows())
    throw_dim("transform_wccn: input has " + std::to_string(x.cols()) +
              " columns; model expects " + std::to_string(model.b.rows()));
  return x * model.b;
}

}  // namespace mvdid
