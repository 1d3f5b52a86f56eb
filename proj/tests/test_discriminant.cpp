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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "mvdid/discriminant.hpp"
#include "support/reference_linalg.hpp"
#include "support/test_util.hpp"

using mvdid::LdaModel;
using mvdid::Matrix;
using mvdid::Vector;
using mvdid::WccnModel;

namespace {

struct Labeled {
  Matrix x;
  std::vector<std::size_t> labels;
};

// Gaussian classes at the given means with isotropic noise.
Labeled gaussian_classes(mvdid::Rng& rng, const Matrix& means,
                         std::size_t per_class, double sigma) {
  const std::size_t c = means.rows(), d = means.cols();
  Labeled out{Matrix(c * per_class, d), {}};
  out.labels.reserve(c * per_class);
  std::size_t row = 0;
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t i = 0; i < per_class; ++i, ++row) {
      for (std::size_t j = 0; j < d; ++j)
        out.x(row, j) = means(k, j) + sigma * rng.normal();
      out.labels.push_back(k);
    }
  return out;
}

// Brute-force pooled within-class covariance, written independently of the
// library's scatter accumulation (explicit two-pass, full dense outer
// products, no symmetry shortcuts).
Matrix pooled_within(const Matrix& x, const std::vector<std::size_t>& labels) {
  std::size_t n_classes = 0;
  for (std::size_t c : labels) n_classes = std::max(n_classes, c + 1);
  const std::size_t d = x.cols();
  Matrix means(n_classes, d);
  std::vector<double> counts(n_classes, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    counts[labels[i]] += 1.0;
    for (std::size_t j = 0; j < d; ++j) means(labels[i], j) += x(i, j);
  }
  for (std::size_t c = 0; c < n_classes; ++c)
    for (std::size_t j = 0; j < d; ++j) means(c, j) /= counts[c];
  Matrix w(d, d);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        w(a, b) += (x(i, a) - means(labels[i], a)) *
                   (x(i, b) - means(labels[i], b));
  for (double& v : w.storage()) v /= static_cast<double>(x.rows());
  return w;
}

double cosine(const Vector& a, const Vector& b) {
  return std::abs(mvdid::dot(a, b)) / (mvdid::norm2(a) * mvdid::norm2(b));
}

}  // namespace

TEST_CASE("fit_lda: axis-separated classes recover the separating axis") {
  mvdid::Rng rng(81);
  const Matrix means = Matrix::from_rows({{-3.0, 0.0, 0.0, 0.0},
                                          {3.0, 0.0, 0.0, 0.0}});
  const Labeled data = gaussian_classes(rng, means, 200, 1.0);
  const LdaModel m = mvdid::fit_lda(data.x, data.labels, 1);
  REQUIRE(m.w.rows() == 4);
  REQUIRE(m.w.cols() == 1);
  Vector e1{1.0, 0.0, 0.0, 0.0};
  CHECK(cosine(mvdid::get_col(m.w, 0), e1) >= 0.99);
}

TEST_CASE("fit_lda: two-class direction matches the closed form") {
  // For two classes the discriminant is (S_w + ridge I)^{-1} (mu_1 - mu_0) up
  // to scale; computed here with the reference Gauss-Jordan inverse and a
  // brute-force S_w.
  mvdid::Rng rng(82);
  const Matrix means = Matrix::from_rows({{1.0, -2.0, 0.5, 0.0, 1.0},
                                          {-1.0, 1.5, 1.0, 0.5, -0.5}});
  const Labeled data = gaussian_classes(rng, means, 120, 0.8);
  const double ridge = 1e-6;
  const LdaModel m = mvdid::fit_lda(data.x, data.labels, 1, ridge);

  Matrix s_w = pooled_within(data.x, data.labels);
  for (std::size_t i = 0; i < 5; ++i) s_w(i, i) += ridge;
  Vector mu0(5), mu1(5);
  double n0 = 0.0, n1 = 0.0;
  for (std::size_t i = 0; i < data.x.rows(); ++i) {
    Vector& mu = data.labels[i] == 0 ? mu0 : mu1;
    (data.labels[i] == 0 ? n0 : n1) += 1.0;
    for (std::size_t j = 0; j < 5; ++j) mu[j] += data.x(i, j);
  }
  Vector diff(5);
  for (std::size_t j = 0; j < 5; ++j) diff[j] = mu1[j] / n1 - mu0[j] / n0;
  const Vector closed_form = refla::inverse(s_w) * diff;
  CHECK(cosine(mvdid::get_col(m.w, 0), closed_form) >= 0.9999);
}

TEST_CASE("fit_lda: five classes cap the dimension at four") {
  mvdid::Rng rng(83);
  const Matrix means = 3.0 * testutil::random_matrix(rng, 5, 6);
  const Labeled data = gaussian_classes(rng, means, 40, 1.0);
  const LdaModel m = mvdid::fit_lda(data.x, data.labels, 4);
  CHECK(m.w.rows() == 6);
  CHECK(m.w.cols() == 4);
  CHECK(m.class_means.rows() == 5);
  try {
    mvdid::fit_lda(data.x, data.labels, 5);
    FAIL("expected a dimension error");
  } catch (const mvdid::Error& e) {
    CHECK(e.kind() == mvdid::ErrorKind::Dimension);
  }
}

TEST_CASE("fit_lda: singleton class is rejected") {
  const Matrix x = Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}, {0.5, 0.5}});
  try {
    mvdid::fit_lda(x, {0, 0, 1}, 1);
    FAIL("expected a data error");
  } catch (const mvdid::Error& e) {
    CHECK(e.kind() == mvdid::ErrorKind::Data);
  }
}

TEST_CASE("transform_lda: the global mean maps to zero") {
  mvdid::Rng rng(84);
  const Matrix means = Matrix::from_rows({{-2.0, 0.0, 1.0}, {2.0, 1.0, 0.0}});
  const Labeled data = gaussian_classes(rng, means, 30, 0.5);
  const LdaModel m = mvdid::fit_lda(data.x, data.labels, 1);
  Matrix rep(4, 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) rep(i, j) = m.global_mean[j];
  CHECK(mvdid::max_abs(mvdid::transform_lda(m, rep)) < 1e-12);
}

TEST_CASE("transform_lda: collinear class means keep their order") {
  // Three classes along a line at -6, 0, +6: the first discriminant axis must
  // place the projected class means in collinear order with the outer pair
  // farthest apart.
  mvdid::Rng rng(85);
  const Matrix means = Matrix::from_rows(
      {{-6.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {6.0, 0.0, 0.0}});
  const Labeled data = gaussian_classes(rng, means, 100, 0.7);
  const LdaModel m = mvdid::fit_lda(data.x, data.labels, 1);
  const Matrix proj = mvdid::transform_lda(m, m.class_means);
  const double p0 = proj(0, 0), p1 = proj(1, 0), p2 = proj(2, 0);
  CHECK(((p0 < p1 && p1 < p2) || (p0 > p1 && p1 > p2)));
  CHECK(std::abs(p2 - p0) > std::abs(p1 - p0));
  CHECK(std::abs(p2 - p0) > std::abs(p2 - p1));
}

TEST_CASE("fit_lda: discriminant quotients decrease along directions") {
  // Rayleigh quotients w_j^T S_b w_j / w_j^T (S_w + ridge I) w_j are the
  // generalized eigenvalues; they must come out sorted and the denominators
  // normalized to one by construction.
  mvdid::Rng rng(86);
  const Matrix means = 2.0 * testutil::random_matrix(rng, 4, 6);
  const Labeled data = gaussian_classes(rng, means, 60, 1.0);
  const double ridge = 1e-6;
  const LdaModel m = mvdid::fit_lda(data.x, data.labels, 3, ridge);

  const mvdid::detail::Scatter s =
      mvdid::detail::scatter_matrices(data.x, data.labels, "test");
  Matrix s_w_r = s.s_w;
  for (std::size_t i = 0; i < 6; ++i) s_w_r(i, i) += ridge;
  Vector quotients(3);
  for (std::size_t j = 0; j < 3; ++j) {
    const Vector wj = mvdid::get_col(m.w, j);
    const double num = mvdid::dot(wj, s.s_b * wj);
    const double den = mvdid::dot(wj, s_w_r * wj);
    CHECK(den == Catch::Approx(1.0).margin(1e-8));
    quotients[j] = num / den;
  }
  CHECK(quotients[0] >= quotients[1]);
  CHECK(quotients[1] >= quotients[2]);
  CHECK(quotients[2] > 0.0);
}

TEST_CASE("fit_wccn: identity within-class covariance is a fixed point") {
  // Integer deviations (+-1, +-1) around each class mean give an exactly
  // identity pooled covariance, so b must be exactly the identity.
  Matrix x(8, 2);
  std::vector<std::size_t> labels;
  const double mean_of[2] = {0.0, 10.0};
  std::size_t row = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    const double dx[4] = {1.0, -1.0, 1.0, -1.0};
    const double dy[4] = {1.0, -1.0, -1.0, 1.0};
    for (std::size_t i = 0; i < 4; ++i, ++row) {
      x(row, 0) = mean_of[c] + dx[i];
      x(row, 1) = mean_of[c] + dy[i];
      labels.push_back(c);
    }
  }
  const WccnModel m = mvdid::fit_wccn(x, labels, 0.0);
  CHECK(testutil::max_abs_diff(m.b, Matrix::identity(2)) < 1e-14);
}

TEST_CASE("fit_wccn: scalar variance four halves the coordinate") {
  // One dimension, deviations +-2 around both class means: W = 4, so
  // b = sqrt(1/4) = 1/2 and the transform halves the coordinates.
  Matrix x(4, 1);
  x(0, 0) = 2.0;
  x(1, 0) = -2.0;
  x(2, 0) = 7.0;
  x(3, 0) = 3.0;  // class-1 mean 5, deviations +-2
  const std::vector<std::size_t> labels{0, 0, 1, 1};
  const WccnModel m = mvdid::fit_wccn(x, labels, 0.0);
  CHECK(m.b(0, 0) == Catch::Approx(0.5).margin(1e-15));
  const Matrix y = mvdid::transform_wccn(m, x);
  CHECK(y(0, 0) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("fit_wccn: multiply-back oracle on random three-class data") {
  mvdid::Rng rng(87);
  const Matrix means = 2.0 * testutil::random_matrix(rng, 3, 4);
  const Labeled data = gaussian_classes(rng, means, 50, 0.9);
  const WccnModel m = mvdid::fit_wccn(data.x, data.labels, 0.0);

  // Lower-triangular with positive diagonal.
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(m.b(i, i) > 0.0);
    for (std::size_t j = i + 1; j < 4; ++j) CHECK(m.b(i, j) == 0.0);
  }
  const Matrix w = pooled_within(data.x, data.labels);
  const Matrix gram = mvdid::transpose(m.b) * w * m.b;
  CHECK(testutil::max_abs_diff(gram, Matrix::identity(4)) < 1e-8);
}

TEST_CASE("transform_wccn: training data is whitened within class") {
  mvdid::Rng rng(88);
  const Matrix means = 3.0 * testutil::random_matrix(rng, 3, 5);
  const Labeled data = gaussian_classes(rng, means, 80, 1.1);
  const WccnModel m = mvdid::fit_wccn(data.x, data.labels, 1e-10);
  const Matrix y = mvdid::transform_wccn(m, data.x);
  const Matrix w_after = pooled_within(y, data.labels);
  CHECK(testutil::max_abs_diff(w_after, Matrix::identity(5)) < 1e-8);
}

TEST_CASE("discriminant: LDA then WCCN whitens the reduced space") {
  mvdid::Rng rng(89);
  const Matrix means = 2.5 * testutil::random_matrix(rng, 4, 7);
  const Labeled data = gaussian_classes(rng, means, 70, 1.0);
  const LdaModel lda = mvdid::fit_lda(data.x, data.labels, 3);
  const Matrix reduced = mvdid::transform_lda(lda, data.x);
  const WccnModel wccn = mvdid::fit_wccn(reduced, data.labels, 1e-10);
  const Matrix final_space = mvdid::transform_wccn(wccn, reduced);
  const Matrix w_after = pooled_within(final_space, data.labels);
  CHECK(testutil::max_abs_diff(w_after, Matrix::identity(3)) < 1e-8);
}

TEST_CASE("discriminant argument validation") {
  mvdid::Rng rng(90);
  const Matrix means = 2.0 * testutil::random_matrix(rng, 3, 4);
  const Labeled data = gaussian_classes(rng, means, 10, 0.5);

  CHECK_THROWS_AS(mvdid::fit_lda(data.x, data.labels, 0), mvdid::Error);
  CHECK_THROWS_AS(mvdid::fit_lda(data.x, data.labels, 3), mvdid::Error);
  CHECK_THROWS_AS(mvdid::fit_lda(data.x, {0, 1}, 1), mvdid::Error);
  CHECK_THROWS_AS(mvdid::fit_lda(data.x, data.labels, 1, -1.0), mvdid::Error);
  CHECK_THROWS_AS(mvdid::fit_wccn(data.x, data.labels, -1.0), mvdid::Error);

  // A label gap means an empty class.
  std::vector<std::size_t> gappy(data.labels);
  for (std::size_t& c : gappy)
    if (c == 1) c = 3;
  CHECK_THROWS_AS(mvdid::fit_lda(data.x, gappy, 2), mvdid::Error);

  // Within-class covariance singular without a ridge: a feature that is
  // constant inside every class.
  Matrix flat = data.x;
  for (std::size_t i = 0; i < flat.rows(); ++i)
    flat(i, 3) = static_cast<double>(data.labels[i]);
  try {
    mvdid::fit_wccn(flat, data.labels, 0.0);
    FAIL("expected a numeric error");
  } catch (const mvdid::Error& e) {
    CHECK(e.kind() == mvdid::ErrorKind::Numeric);
  }

  const LdaModel lda = mvdid::fit_lda(data.x, data.labels, 2);
  CHECK_THROWS_AS(mvdid::transform_lda(lda, testutil::random_matrix(rng, 4, 5)),
                  mvdid::Error);
  const WccnModel wccn = mvdid::fit_wccn(data.x, data.labels);
  CHECK_THROWS_AS(
      mvdid::transform_wccn(wccn, testutil::random_matrix(rng, 4, 3)),
      mvdid::Error);
}
