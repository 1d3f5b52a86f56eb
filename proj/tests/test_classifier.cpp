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
#include <numeric>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "mvdid/classifier.hpp"
#include "support/test_util.hpp"

using mvdid::Matrix;
using mvdid::SoftmaxModel;
using mvdid::TrainConfig;
using mvdid::Vector;

namespace {

struct Labeled {
  Matrix x;
  std::vector<std::size_t> labels;
};

Labeled blobs(mvdid::Rng& rng, const Matrix& means, std::size_t per_class,
              double sigma) {
  const std::size_t c = means.rows(), d = means.cols();
  Labeled out{Matrix(c * per_class, d), {}};
  std::size_t row = 0;
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t i = 0; i < per_class; ++i, ++row) {
      for (std::size_t j = 0; j < d; ++j)
        out.x(row, j) = means(k, j) + sigma * rng.normal();
      out.labels.push_back(k);
    }
  return out;
}

std::vector<std::string> names(std::size_t c) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < c; ++i) out.push_back(std::string(1, 'A' + static_cast<char>(i)));
  return out;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), 0);
  return r;
}

}  // namespace

TEST_CASE("train_softmax: separable two-class data is fit perfectly") {
  mvdid::Rng rng(91);
  const Matrix means = Matrix::from_rows({{-2.0, -2.0}, {2.0, 2.0}});
  const Labeled data = blobs(rng, means, 40, 0.5);
  TrainConfig cfg;
  cfg.reg_strength = 1e-3;
  cfg.epochs = 100;
  cfg.batch = 8;
  const SoftmaxModel m = mvdid::train_softmax(data.x, data.labels, names(2), cfg);
  const std::vector<std::string> pred = mvdid::predict(m, data.x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    hits += pred[i] == m.label_set[data.labels[i]];
  CHECK(hits == pred.size());
}

TEST_CASE("train_softmax: overwhelming regularization yields the prior") {
  // lambda = 1e6 makes the proximal step zero every weight immediately; the
  // unregularized bias still learns the class frequencies, so every row gets
  // the majority class.
  mvdid::Rng rng(92);
  const Matrix means = Matrix::from_rows({{-1.0, 0.0}, {1.0, 0.5}});
  Labeled data = blobs(rng, means, 30, 0.8);
  Labeled minority = blobs(rng, Matrix::from_rows({{1.0, 0.5}}), 10, 0.8);
  // Rebuild as 30 of class 0 and 10 of class 1.
  Matrix x(40, 2);
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 30; ++i) {
    x(i, 0) = data.x(i, 0);
    x(i, 1) = data.x(i, 1);
    labels.push_back(0);
  }
  for (std::size_t i = 0; i < 10; ++i) {
    x(30 + i, 0) = minority.x(i, 0);
    x(30 + i, 1) = minority.x(i, 1);
    labels.push_back(1);
  }
  TrainConfig cfg;
  cfg.reg_strength = 1e6;
  cfg.epochs = 20;
  cfg.batch = 0;
  const SoftmaxModel m = mvdid::train_softmax(x, labels, names(2), cfg);
  CHECK(mvdid::max_abs(m.w) < 1e-12);
  CHECK(m.bias[0] > m.bias[1]);
  for (const std::string& p : mvdid::predict(m, x)) CHECK(p == "A");
}

TEST_CASE("softmax_gradient: matches central finite differences") {
  // The analytic gradient covers the smooth terms; at coordinates away from
  // zero the full objective also has the L1 contribution lambda*l1*sign(w),
  // added here by hand. Step 1e-5, relative error under 1e-4.
  mvdid::Rng rng(93);
  const std::size_t n = 12, d = 4, c = 3;
  const Matrix x = testutil::random_matrix(rng, n, d);
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(i % c);
  TrainConfig cfg;
  cfg.reg_strength = 0.01;

  // Weights bounded away from zero so the L1 term is differentiable there.
  Matrix w(d, c);
  for (double& v : w.storage()) {
    const double g = rng.normal();
    v = (g >= 0.0 ? 1.0 : -1.0) * (0.1 + std::abs(g));
  }
  Vector bias(c);
  for (double& v : bias) v = rng.normal();

  Matrix grad_w;
  Vector grad_b;
  mvdid::softmax_gradient(w, bias, x, labels, all_rows(n), cfg, grad_w, grad_b);

  const double h = 1e-5;
  auto rel_err = [](double a, double f) {
    return std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-3});
  };
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < c; ++k) {
      Matrix wp = w, wm = w;
      wp(j, k) += h;
      wm(j, k) -= h;
      const double fd = (mvdid::softmax_objective(wp, bias, x, labels, cfg) -
                         mvdid::softmax_objective(wm, bias, x, labels, cfg)) /
                        (2.0 * h);
      const double analytic =
          grad_w(j, k) + cfg.reg_strength * cfg.l1_ratio *
                             (w(j, k) > 0.0 ? 1.0 : -1.0);
      CHECK(rel_err(analytic, fd) < 1e-4);
    }
  for (std::size_t k = 0; k < c; ++k) {
    Vector bp = bias, bm = bias;
    bp[k] += h;
    bm[k] -= h;
    const double fd = (mvdid::softmax_objective(w, bp, x, labels, cfg) -
                       mvdid::softmax_objective(w, bm, x, labels, cfg)) /
                      (2.0 * h);
    CHECK(rel_err(grad_b[k], fd) < 1e-4);
  }
}

TEST_CASE("train_softmax: full-batch steps never increase the loss") {
  // With no regularization the schedule is a constant step eta_0 well below
  // the curvature bound for unit-scale data, so plain gradient descent must
  // descend monotonically; run-to-epoch-e prefixes of the same config expose
  // the whole trajectory.
  mvdid::Rng rng(94);
  const Matrix means = Matrix::from_rows(
      {{-1.5, 0.0, 1.0}, {1.5, 1.0, 0.0}, {0.0, -1.5, -1.0}});
  const Labeled data = blobs(rng, means, 20, 1.0);
  TrainConfig cfg;
  cfg.reg_strength = 0.0;
  cfg.learning_rate = 0.05;
  cfg.batch = 0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t e = 1; e <= 12; ++e) {
    cfg.epochs = e;
    const SoftmaxModel m = mvdid::train_softmax(data.x, data.labels, names(3), cfg);
    const double loss = mvdid::softmax_objective(m.w, m.bias, data.x, data.labels, cfg);
    CHECK(loss <= prev + 1e-8);
    prev = loss;
  }
}

TEST_CASE("train_softmax: identical configs give bit-identical models") {
  mvdid::Rng rng(95);
  const Matrix means = Matrix::from_rows({{-1.0, 1.0}, {1.0, -1.0}, {0.0, 2.0}});
  const Labeled data = blobs(rng, means, 15, 0.6);
  TrainConfig cfg;
  cfg.epochs = 7;
  cfg.batch = 4;
  cfg.seed = 1234;
  const SoftmaxModel a = mvdid::train_softmax(data.x, data.labels, names(3), cfg);
  const SoftmaxModel b = mvdid::train_softmax(data.x, data.labels, names(3), cfg);
  CHECK(a.w.storage() == b.w.storage());
  CHECK(a.bias == b.bias);
}

TEST_CASE("train_softmax: divergence names the epoch") {
  const Matrix x = Matrix::from_rows({{1e200, 0.0}, {0.0, 1e200}});
  TrainConfig cfg;
  cfg.learning_rate = 1e200;
  cfg.reg_strength = 0.0;
  cfg.batch = 0;
  cfg.epochs = 3;
  try {
    mvdid::train_softmax(x, {0, 1}, names(2), cfg);
    FAIL("expected a numeric error");
  } catch (const mvdid::Error& e) {
    CHECK(e.kind() == mvdid::ErrorKind::Numeric);
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("predict_proba: zero model gives exactly uniform rows") {
  SoftmaxModel m;
  m.w = Matrix(3, 4);
  m.bias = Vector(4, 0.0);
  m.label_set = names(4);
  mvdid::Rng rng(96);
  const Matrix p = mvdid::predict_proba(m, testutil::random_matrix(rng, 5, 3));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 4; ++c)
      CHECK(p(i, c) == Catch::Approx(0.25).margin(1e-15));
}

TEST_CASE("predict_proba: extreme logits saturate without overflow") {
  SoftmaxModel m;
  m.w = Matrix(2, 3);
  m.bias = Vector{1000.0, 0.0, 0.0};
  m.label_set = names(3);
  const Matrix p = mvdid::predict_proba(m, Matrix(1, 2));
  CHECK(p(0, 0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(p(0, 1) == 0.0);
  CHECK(p(0, 2) == 0.0);
}

TEST_CASE("predict_proba: rows are probability vectors") {
  mvdid::Rng rng(97);
  SoftmaxModel m;
  m.w = testutil::random_matrix(rng, 6, 5, 2.0);
  m.bias = Vector(5);
  for (double& v : m.bias) v = rng.normal();
  m.label_set = names(5);
  const Matrix p = mvdid::predict_proba(m, testutil::random_matrix(rng, 20, 6));
  for (std::size_t i = 0; i < 20; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 5; ++c) {
      CHECK(p(i, c) >= 0.0);
      CHECK(p(i, c) <= 1.0);
      sum += p(i, c);
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("predict: argmax with lowest-index tie break") {
  SoftmaxModel m;
  m.w = Matrix(2, 3);
  m.bias = Vector(3, 0.0);
  m.label_set = names(3);

  SECTION("uniform row picks the first label") {
    const std::vector<std::string> p = mvdid::predict(m, Matrix(2, 2));
    CHECK(p == std::vector<std::string>{"A", "A"});
  }
  SECTION("clear winner") {
    m.bias = Vector{std::log(0.1), std::log(0.7), std::log(0.2)};
    const std::vector<std::string> p = mvdid::predict(m, Matrix(1, 2));
    CHECK(p == std::vector<std::string>{"B"});
  }
  SECTION("agrees with the probability argmax") {
    mvdid::Rng rng(98);
    m.w = testutil::random_matrix(rng, 2, 3);
    const Matrix x = testutil::random_matrix(rng, 25, 2);
    const Matrix proba = mvdid::predict_proba(m, x);
    const std::vector<std::string> p = mvdid::predict(m, x);
    for (std::size_t i = 0; i < 25; ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < 3; ++c)
        if (proba(i, c) > proba(i, best)) best = c;
      CHECK(p[i] == m.label_set[best]);
    }
  }
}

TEST_CASE("score_fuse: identity, idempotence, and selection") {
  mvdid::Rng rng(99);
  // Build two row-stochastic matrices.
  auto stochastic = [&rng](std::size_t n, std::size_t c) {
    Matrix p(n, c);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        p(i, j) = rng.uniform(0.05, 1.0);
        sum += p(i, j);
      }
      for (std::size_t j = 0; j < c; ++j) p(i, j) /= sum;
    }
    return p;
  };
  const Matrix p1 = stochastic(6, 4);
  const Matrix p2 = stochastic(6, 4);

  CHECK(testutil::max_abs_diff(mvdid::score_fuse({p1}, Vector{1.0}), p1) < 1e-15);
  CHECK(testutil::max_abs_diff(mvdid::score_fuse({p1, p1}, Vector{0.3, 0.7}), p1) < 1e-15);
  CHECK(testutil::max_abs_diff(mvdid::score_fuse({p1, p2}, Vector{1.0, 0.0}), p1) < 1e-15);

  // Default weights are equal: fusing with the uniform matrix moves every row
  // toward uniform but keeps it stochastic.
  Matrix uniform(6, 4, 0.25);
  const Matrix mixed = mvdid::score_fuse({p1, uniform});
  for (std::size_t i = 0; i < 6; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 4; ++j) sum += mixed(i, j);
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(mixed(i, j) == Catch::Approx(0.5 * p1(i, j) + 0.125).margin(1e-12));
  }
}

TEST_CASE("score_fuse_log: geometric mixing keeps the same fixed points") {
  mvdid::Rng rng(101);
  auto stochastic = [&rng](std::size_t n, std::size_t c) {
    Matrix p(n, c);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        p(i, j) = rng.uniform(0.05, 1.0);
        sum += p(i, j);
      }
      for (std::size_t j = 0; j < c; ++j) p(i, j) /= sum;
    }
    return p;
  };
  const Matrix p1 = stochastic(5, 3);
  const Matrix p2 = stochastic(5, 3);

  // Self-fusion and zero-weight selection behave like the linear variant.
  CHECK(testutil::max_abs_diff(mvdid::score_fuse_log({p1, p1}, Vector{0.4, 0.6}), p1) < 1e-12);
  CHECK(testutil::max_abs_diff(mvdid::score_fuse_log({p1, p2}, Vector{1.0, 0.0}), p1) < 1e-12);

  // General case: rows are stochastic, and equal weights give the normalized
  // geometric mean, checked cell-by-cell against a direct evaluation.
  const Matrix mixed = mvdid::score_fuse_log({p1, p2});
  for (std::size_t i = 0; i < 5; ++i) {
    double sum = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < 3; ++j) norm += std::sqrt(p1(i, j) * p2(i, j));
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(mixed(i, j) ==
            Catch::Approx(std::sqrt(p1(i, j) * p2(i, j)) / norm).margin(1e-12));
      sum += mixed(i, j);
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  }
  CHECK_THROWS_AS(mvdid::score_fuse_log({p1, p1}, Vector{0.0, 0.0}), mvdid::Error);
}

TEST_CASE("classifier argument validation") {
  mvdid::Rng rng(100);
  const Matrix x = testutil::random_matrix(rng, 6, 2);
  const std::vector<std::size_t> labels{0, 1, 0, 1, 0, 1};

  // Label index outside the label set.
  CHECK_THROWS_AS(mvdid::train_softmax(x, {0, 1, 0, 1, 0, 2}, names(2)),
                  mvdid::Error);
  // Fewer rows than classes.
  CHECK_THROWS_AS(
      mvdid::train_softmax(testutil::random_matrix(rng, 2, 2), {0, 1}, names(3)),
      mvdid::Error);
  // Length mismatch.
  CHECK_THROWS_AS(mvdid::train_softmax(x, {0, 1}, names(2)), mvdid::Error);

  TrainConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(mvdid::train_softmax(x, labels, names(2), bad), mvdid::Error);
  bad = TrainConfig{};
  bad.l1_ratio = -0.1;
  CHECK_THROWS_AS(mvdid::train_softmax(x, labels, names(2), bad), mvdid::Error);
  bad = TrainConfig{};
  bad.learning_rate = 0.0;
  try {
    mvdid::train_softmax(x, labels, names(2), bad);
    FAIL("expected a config error");
  } catch (const mvdid::Error& e) {
    CHECK(e.kind() == mvdid::ErrorKind::Config);
  }

  const SoftmaxModel m = mvdid::train_softmax(x, labels, names(2));
  CHECK_THROWS_AS(mvdid::predict_proba(m, testutil::random_matrix(rng, 3, 5)),
                  mvdid::Error);

  const Matrix p1(4, 3, 0.25);
  CHECK_THROWS_AS(mvdid::score_fuse({}), mvdid::Error);
  CHECK_THROWS_AS(mvdid::score_fuse({p1, Matrix(4, 2, 0.5)}), mvdid::Error);
  CHECK_THROWS_AS(mvdid::score_fuse({p1, p1}, Vector{1.0}), mvdid::Error);
  CHECK_THROWS_AS(mvdid::score_fuse({p1, p1}, Vector{1.0, -0.5}), mvdid::Error);
  CHECK_THROWS_AS(mvdid::score_fuse({p1, p1}, Vector{0.0, 0.0}), mvdid::Error);
}
