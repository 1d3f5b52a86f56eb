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
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "mvdid/error.hpp"
#include "mvdid/matrix.hpp"
#include "mvdid/rng.hpp"

namespace mvdid {

// Multi-class logistic regression (softmax) back-end with an elastic-net
// penalty, trained by mini-batch SGD. The objective is
//
//   mean cross-entropy + lambda * (l1 * |W|_1 + l2 * 0.5 * |W|_2^2)
//
// with the bias unregularized. The smooth terms take a gradient step; the L1
// term is applied as a proximal (soft-threshold) step afterwards, which is
// what actually zeroes coordinates — subgradient steps never land exactly on
// zero. Score-level fusion of several systems' probability outputs lives here
// too, as the model-combination baseline.

struct SoftmaxModel {
  Matrix w;       // D x C
  Vector bias;    // C
  std::vector<std::string> label_set;
};

struct TrainConfig {
  double l1_ratio = 0.5;
  double l2_ratio = 0.5;
  double reg_strength = 1e-4;   // lambda, the overall penalty strength
  double learning_rate = 0.1;   // eta_0 of eta_t = eta_0 / (1 + eta_0*lambda*t)
  std::size_t epochs = 50;
  std::size_t batch = 1;        // 1 = pure SGD; 0 = one full-batch step/epoch
  std::uint64_t seed = 1;
};

namespace detail {

inline void check_train_config(const TrainConfig& cfg) {
  if (cfg.l1_ratio < 0.0 || cfg.l2_ratio < 0.0)
    throw_config("train_softmax: elastic-net ratios must be >= 0");
  if (cfg.reg_strength < 0.0)
    throw_config("train_softmax: reg_strength must be >= 0");
  if (cfg.learning_rate <= 0.0)
    throw_config("train_softmax: learning_rate must be > 0");
  if (cfg.epochs < 1) throw_config("train_softmax: epochs must be >= 1");
}

// Softmax of z into p with max-subtraction; returns log(sum exp) + max so
// callers can form the log-likelihood without re-exponentiating.
inline double stable_softmax(const Vector& z, Vector& p) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t c = 0; c < z.size(); ++c) {
    p[c] = std::exp(z[c] - zmax);
    sum += p[c];
  }
  for (double& v : p) v /= sum;
  return std::log(sum) + zmax;
}

// Logits of row i.
inline void row_logits(const Matrix& w, const Vector& bias, const Matrix& x,
                       std::size_t i, Vector& z) {
  const std::size_t d = w.rows(), n_classes = w.cols();
  for (std::size_t c = 0; c < n_classes; ++c) z[c] = bias[c];
  const double* xi = x.row(i);
  for (std::size_t j = 0; j < d; ++j) {
    const double v = xi[j];
    if (v == 0.0) continue;
    for (std::size_t c = 0; c < n_classes; ++c) z[c] += v * w(j, c);
  }
}

}  // namespace detail

// Full elastic-net objective: mean cross-entropy over all rows plus the
// penalty. Exposed so training behavior is checkable against the numbers it
// claims to minimize.
inline double softmax_objective(const Matrix& w, const Vector& bias,
                                const Matrix& x,
                                const std::vector<std::size_t>& labels,
                                const TrainConfig& cfg) {
  const std::size_t n = x.rows(), n_classes = w.cols();
  if (labels.size() != n)
    throw_dim("softmax_objective: labels length does not match row count");
  Vector z(n_classes), p(n_classes);
  double ce = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    detail::row_logits(w, bias, x, i, z);
    const double lse = detail::stable_softmax(z, p);
    ce += lse - z[labels[i]];
  }
  ce /= static_cast<double>(n);
  double l1 = 0.0, l2 = 0.0;
  for (const double v : w.storage()) {
    l1 += std::abs(v);
    l2 += v * v;
  }
  return ce + cfg.reg_strength * (cfg.l1_ratio * l1 + cfg.l2_ratio * 0.5 * l2);
}

// Gradient of the smooth objective terms (cross-entropy + L2) over the given
// rows; the L1 term is not included — training handles it proximally, and its
// subgradient is only defined away from zero anyway.
inline void softmax_gradient(const Matrix& w, const Vector& bias,
                             const Matrix& x,
                             const std::vector<std::size_t>& labels,
                             const std::vector<std::size_t>& rows,
                             const TrainConfig& cfg, Matrix& grad_w,
                             Vector& grad_b) {
  const std::size_t d = w.rows(), n_classes = w.cols();
  grad_w = Matrix(d, n_classes);
  grad_b = Vector(n_classes, 0.0);
  Vector z(n_classes), p(n_classes);
  for (const std::size_t i : rows) {
    detail::row_logits(w, bias, x, i, z);
    detail::stable_softmax(z, p);
    p[labels[i]] -= 1.0;  // p - onehot(y)
    const double* xi = x.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double v = xi[j];
      if (v == 0.0) continue;
      for (std::size_t c = 0; c < n_classes; ++c) grad_w(j, c) += v * p[c];
    }
    for (std::size_t c = 0; c < n_classes; ++c) grad_b[c] += p[c];
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  const double l2 = cfg.reg_strength * cfg.l2_ratio;
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t c = 0; c < n_classes; ++c)
      grad_w(j, c) = grad_w(j, c) * inv + l2 * w(j, c);
  for (double& v : grad_b) v *= inv;
}

// Mini-batch SGD with per-epoch seeded shuffling, inverse-scaling learning
// rate eta_t = eta_0 / (1 + eta_0 * lambda * t) over update steps t, and a
// proximal soft-threshold for the L1 term after each gradient step. The whole
// procedure is deterministic for a fixed config.
inline SoftmaxModel train_softmax(const Matrix& x,
                                  const std::vector<std::size_t>& labels,
                                  const std::vector<std::string>& label_set,
                                  const TrainConfig& cfg = {}) {
  detail::check_train_config(cfg);
  const std::size_t n = x.rows(), d = x.cols(), n_classes = label_set.size();
  if (n_classes < 2) throw_data("train_softmax: need at least 2 labels");
  if (labels.size() != n)
    throw_dim("train_softmax: labels length does not match row count");
  if (n < n_classes)
    throw_data("train_softmax: need at least as many rows as classes");
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] >= n_classes)
      throw_data("train_softmax: row " + std::to_string(i) + " has label index " +
                 std::to_string(labels[i]) + " outside the label set");

  SoftmaxModel m;
  m.w = Matrix(d, n_classes);
  m.bias = Vector(n_classes, 0.0);
  m.label_set = label_set;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed);
  Matrix grad_w;
  Vector grad_b;
  std::vector<std::size_t> batch_rows;
  std::size_t t = 0;  // update counter, drives the rate schedule

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.batch != 0) rng.shuffle(order);
    const std::size_t step = cfg.batch == 0 ? n : cfg.batch;
    for (std::size_t start = 0; start < n; start += step) {
      batch_rows.assign(order.begin() + start,
                        order.begin() + std::min(start + step, n));
      softmax_gradient(m.w, m.bias, x, labels, batch_rows, cfg, grad_w,
                       grad_b);
      const double eta = cfg.learning_rate /
                         (1.0 + cfg.learning_rate * cfg.reg_strength *
                                    static_cast<double>(t));
      ++t;
      const double shrink = eta * cfg.reg_strength * cfg.l1_ratio;
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t c = 0; c < n_classes; ++c) {
          double v = m.w(j, c) - eta * grad_w(j, c);
          // Proximal L1: pull toward zero, clamp at zero.
          if (v > shrink)
            v -= shrink;
          else if (v < -shrink)
            v += shrink;
          else
            v = 0.0;
          m.w(j, c) = v;
        }
      for (std::size_t c = 0; c < n_classes; ++c)
        m.bias[c] -= eta * grad_b[c];
    }
    const double loss = softmax_objective(m.w, m.bias, x, labels, cfg);
    if (!std::isfinite(loss))
      throw_numeric("train_softmax: loss diverged at epoch " +
                    std::to_string(epoch + 1) + "; lower the learning rate");
  }
  return m;
}

// Row-wise class probabilities softmax(x W + b), overflow-safe.
inline Matrix predict_proba(const SoftmaxModel& m, const Matrix& x) {
  if (x.cols() != m.w.rows())
    throw_dim("predict_proba: input has " + std::to_string(x.cols()) +
              " columns; model expects " + std::to_string(m.w.rows()));
  const std::size_t n = x.rows(), n_classes = m.w.cols();
  Matrix out(n, n_classes);
  Vector z(n_classes), p(n_classes);
  for (std::size_t i = 0; i < n; ++i) {
    detail::row_logits(m.w, m.bias, x, i, z);
    detail::stable_softmax(z, p);
    for (std::size_t c = 0; c < n_classes; ++c) out(i, c) = p[c];
  }
  return out;
}

// Hard decisions: argmax of the class probabilities, ties to the lowest
// index in label-set order.
// Argmax decoding shared by single-system prediction and score fusion. Ties
// go to the lowest class index, so decisions are deterministic.
inline std::vector<std::string> predict_from_scores(
    const Matrix& scores, const std::vector<std::string>& label_set) {
  if (scores.cols() != label_set.size())
    throw_dim("predict_from_scores: score width does not match label count");
  std::vector<std::string> out;
  out.reserve(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.cols(); ++c)
      if (scores(i, c) > scores(i, best)) best = c;
    out.push_back(label_set[best]);
  }
  return out;
}

inline std::vector<std::string> predict(const SoftmaxModel& m,
                                        const Matrix& x) {
  return predict_from_scores(predict_proba(m, x), m.label_set);
}

// Weighted log-space combination (a normalized weighted geometric mean):
// exp(sum_k w_k log p_k) per cell, rows renormalized. Probabilities are
// floored at 1e-300 so a hard zero from one system vetoes a class without
// producing log(0). Equal weights when none are given.
inline Matrix score_fuse_log(const std::vector<Matrix>& probas,
                             Vector weights = {}) {
  if (probas.empty()) throw_data("score_fuse_log: no probability matrices");
  const std::size_t n = probas.front().rows(), c = probas.front().cols();
  for (const Matrix& p : probas)
    if (p.rows() != n || p.cols() != c)
      throw_dim("score_fuse_log: probability matrices have mismatched shapes");
  if (weights.empty()) weights.assign(probas.size(), 1.0);
  if (weights.size() != probas.size())
    throw_dim("score_fuse_log: need one weight per matrix");
  double wsum = 0.0;
  for (const double w : weights) {
    if (w < 0.0) throw_data("score_fuse_log: weights must be >= 0");
    wsum += w;
  }
  if (wsum <= 0.0) throw_data("score_fuse_log: weights must not all be zero");

  Matrix out(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    Vector logmix(c, 0.0);
    for (std::size_t j = 0; j < c; ++j) {
      for (std::size_t k = 0; k < probas.size(); ++k)
        logmix[j] += weights[k] / wsum *
                     std::log(std::max(probas[k](i, j), 1e-300));
      row_max = std::max(row_max, logmix[j]);
    }
    double rsum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      out(i, j) = std::exp(logmix[j] - row_max);
      rsum += out(i, j);
    }
    for (std::size_t j = 0; j < c; ++j) out(i, j) /= rsum;
  }
  return out;
}

// Weighted probability-space combination of several systems' outputs:
// normalize the weights to sum one, mix, then renormalize each row. Equal
// weights when none are given.
inline Matrix score_fuse(const std::vector<Matrix>& probas,
                         Vector weights = {}) {
  if (probas.empty()) throw_data("score_fuse: no probability matrices");
  const std::size_t n = probas.front().rows(), c = probas.front().cols();
  for (const Matrix& p : probas)
    if (p.rows() != n || p.cols() != c)
      throw_dim("score_fuse: probability matrices have mismatched shapes");
  if (weights.empty()) weights.assign(probas.size(), 1.0);
  if (weights.size() != probas.size())
    throw_dim("score_fuse: need one weight per matrix");
  double wsum = 0.0;
  for (const double w : weights) {
    if (w < 0.0) throw_data("score_fuse: weights must be >= 0");
    wsum += w;
  }
  if (wsum <= 0.0) throw_data("score_fuse: weights must not all be zero");

  Matrix out(n, c);
  for (std::size_t k = 0; k < probas.size(); ++k) {
    const double wk = weights[k] / wsum;
    if (wk == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) out(i, j) += wk * probas[k](i, j);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double rsum = 0.0;
    for (std::size_t j = 0; j < c; ++j) rsum += out(i, j);
    if (rsum <= 0.0)
      throw_numeric("score_fuse: row " + std::to_string(i) +
                    " sums to zero after mixing");
    for (std::size_t j = 0; j < c; ++j) out(i, j) /= rsum;
  }
  return out;
}

}  // namespace mvdid
