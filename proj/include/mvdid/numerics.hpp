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
#include <numeric>
#include <string>
#include <vector>

#include "mvdid/error.hpp"
#include "mvdid/matrix.hpp"

namespace mvdid {

// Default Tikhonov ridge applied wherever a covariance is inverted.
inline constexpr double kDefaultRidge = 1e-6;

// Top-k singular triplets: u (n x k) and v (m x k) have orthonormal columns,
// s is non-negative and sorted descending.
struct SvdResult {
  Matrix u;
  Vector s;
  Matrix v;
};

// Full symmetric eigendecomposition, eigenvalues descending, eigenvectors in
// the columns of `vectors`.
struct EigResult {
  Vector values;
  Matrix vectors;
};

namespace detail {

// Deterministic sign convention: a vector is flipped so that its
// largest-magnitude entry is positive; magnitude ties break to the lowest
// index. Returns the factor (+1/-1) applied.
inline double sign_fix_col(Matrix& m, std::size_t j) {
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double a = std::abs(m(i, j));
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (m(arg, j) < 0.0) {
    for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) = -m(i, j);
    return -1.0;
  }
  return 1.0;
}

// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues in
// arbitrary order paired with the accumulated rotation columns.
inline void jacobi_symmetric(Matrix a, Vector& values, Matrix& vectors) {
  const std::size_t n = a.rows();
  vectors = Matrix::identity(n);
  if (n == 0) {
    values.clear();
    return;
  }
  // Kill representation asymmetry up front so rotations stay exact.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = a(j, i) = s;
    }

  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    double diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag += a(i, i) * a(i, i);
    const double scale = std::sqrt(off + diag);
    if (std::sqrt(off) <= 1e-15 * std::max(scale, 1e-300)) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-18 * std::max(scale, 1e-300)) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  values.resize(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
}

// Cholesky factor L (lower) of an SPD matrix, or throws Numeric.
inline Matrix cholesky_lower(const Matrix& a, const char* who) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw_dim(std::string(who) + ": matrix not square");
  Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0)
          throw_numeric(std::string(who) + ": matrix not positive definite");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

// Solves A x = b for SPD A via Cholesky.
inline Vector solve_spd(const Matrix& a, const Vector& b, const char* who) {
  const Matrix l = cholesky_lower(a, who);
  const std::size_t n = b.size();
  Vector y(n), x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

// Inverse of an SPD matrix via Cholesky, symmetrized.
inline Matrix invert_spd(const Matrix& a, const char* who) {
  const std::size_t n = a.rows();
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vector x = solve_spd(a, e, who);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = x[i];
    e[j] = 0.0;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = inv(j, i) = s;
    }
  return inv;
}

}  // namespace detail

// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
// Input must be symmetric within 1e-10.
inline EigResult sym_eig(const Matrix& a) {
  if (a.rows() != a.cols()) throw_dim("sym_eig: matrix not square");
  if (!all_finite(a)) throw_data("sym_eig: non-finite entries");
  const double scale = std::max(max_abs(a), 1.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-10 * scale)
        throw_data("sym_eig: matrix not symmetric within 1e-10");

  Vector values;
  Matrix vectors;
  detail::jacobi_symmetric(a, values, vectors);

  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });

  EigResult r;
  r.values.resize(n);
  r.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    r.values[j] = values[order[j]];
    for (std::size_t i = 0; i < n; ++i) r.vectors(i, j) = vectors(i, order[j]);
    detail::sign_fix_col(r.vectors, j);
  }
  return r;
}

// Top-k SVD by one-sided Jacobi orthogonalization, run to machine precision
// (any k up to min(rows, cols); `tol` is the caller's accuracy contract and
// must be positive). Signs are anchored on the right singular vectors.
inline SvdResult truncated_svd(const Matrix& m, std::size_t k, double tol = 1e-10) {
  if (tol <= 0.0) throw_data("truncated_svd: tol must be > 0");
  const std::size_t mn = std::min(m.rows(), m.cols());
  if (k < 1 || k > mn)
    throw_dim("truncated_svd: k=" + std::to_string(k) + " out of range [1, " +
              std::to_string(mn) + "]");
  if (!all_finite(m)) throw_data("truncated_svd: non-finite entries");

  // Work on a tall copy; swap factors back afterwards if transposed.
  const bool transposed = m.rows() < m.cols();
  Matrix w = transposed ? transpose(m) : m;
  const std::size_t n = w.rows(), d = w.cols();
  Matrix v = Matrix::identity(d);

  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          alpha += wp * wp;
          beta += wq * wq;
          gamma += wp * wq;
        }
        if (std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta) || gamma == 0.0)
          continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < n; ++i) {
          const double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < d; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  Vector s(d);
  for (std::size_t j = 0; j < d; ++j) {
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) nrm += w(i, j) * w(i, j);
    s[j] = std::sqrt(nrm);
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });

  const double s_max = s.empty() ? 0.0 : s[order[0]];
  const double tiny = std::max(s_max, 1.0) * 1e-13;

  Matrix uk(n, k), vk(d, k);
  Vector sk(k);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t src = order[j];
    sk[j] = s[src];
    for (std::size_t i = 0; i < d; ++i) vk(i, j) = v(i, src);
    if (s[src] > tiny) {
      for (std::size_t i = 0; i < n; ++i) uk(i, j) = w(i, src) / s[src];
    } else {
      // Null direction: complete U with a unit vector orthogonal to the
      // columns already placed (canonical candidates, largest residual wins).
      Vector cand(n, 0.0);
      double best_res = -1.0;
      std::size_t best_axis = 0;
      for (std::size_t axis = 0; axis < n; ++axis) {
        double res = 1.0;
        for (std::size_t jj = 0; jj < j; ++jj) res -= uk(axis, jj) * uk(axis, jj);
        if (res > best_res) {
          best_res = res;
          best_axis = axis;
        }
      }
      cand[best_axis] = 1.0;
      for (std::size_t jj = 0; jj < j; ++jj) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += uk(i, jj) * cand[i];
        for (std::size_t i = 0; i < n; ++i) cand[i] -= proj * uk(i, jj);
      }
      const double nrm = norm2(cand);
      if (nrm <= 0.0) throw_numeric("truncated_svd: failed to complete basis");
      for (std::size_t i = 0; i < n; ++i) uk(i, j) = cand[i] / nrm;
    }
  }

  SvdResult r;
  if (transposed) {
    r.u = std::move(vk);
    r.v = std::move(uk);
  } else {
    r.u = std::move(uk);
    r.v = std::move(vk);
  }
  r.s = std::move(sk);
  for (std::size_t j = 0; j < k; ++j) {
    const double f = detail::sign_fix_col(r.v, j);
    if (f < 0.0)
      for (std::size_t i = 0; i < r.u.rows(); ++i) r.u(i, j) = -r.u(i, j);
  }
  return r;
}

// B = (c + ridge*I)^{-1/2} for symmetric PSD c, via eigendecomposition.
// Eigenvalues below -1e-8 after the ridge are rejected as not-PSD; an
// effectively singular spectrum cannot satisfy B (c+rI) B = I and is a
// numeric error (raise the ridge).
inline Matrix inv_sqrt_psd(const Matrix& c, double ridge) {
  if (c.rows() != c.cols()) throw_dim("inv_sqrt_psd: matrix not square");
  if (ridge < 0.0) throw_data("inv_sqrt_psd: ridge must be >= 0");
  Matrix a = c;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += ridge;
  const EigResult eig = sym_eig(a);

  const double lam_max = eig.values.empty() ? 0.0 : eig.values.front();
  const double tiny = std::max(std::abs(lam_max), 1.0) * 1e-14;
  for (double lam : eig.values) {
    if (lam < -1e-8) throw_numeric("inv_sqrt_psd: matrix not PSD (eigenvalue " +
                                   std::to_string(lam) + ")");
    if (lam < tiny)
      throw_numeric("inv_sqrt_psd: singular after ridge; increase ridge");
  }

  const std::size_t n = a.rows();
  Matrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += eig.vectors(i, k) * eig.vectors(j, k) / std::sqrt(eig.values[k]);
      b(i, j) = b(j, i) = s;
    }
  return b;
}

// Sample cross-covariance (1/(N-1)) X~^T Y~, columns mean-centered when
// `center` is set. Rows are observations.
inline Matrix cross_cov(const Matrix& x, const Matrix& y, bool center = true) {
  if (x.rows() != y.rows()) throw_dim("cross_cov: row counts differ");
  const std::size_t n = x.rows();
  if (n < 2) throw_data("cross_cov: need at least 2 rows");
  Vector mx(x.cols(), 0.0), my(y.cols(), 0.0);
  if (center) {
    mx = column_means(x);
    my = column_means(y);
  }
  Matrix c(x.cols(), y.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    const double* yi = y.row(i);
    for (std::size_t p = 0; p < x.cols(); ++p) {
      const double xc = xi[p] - mx[p];
      if (xc == 0.0) continue;
      for (std::size_t q = 0; q < y.cols(); ++q) c(p, q) += xc * (yi[q] - my[q]);
    }
  }
  const double f = 1.0 / static_cast<double>(n - 1);
  for (double& v : c.storage()) v *= f;
  return c;
}

}  // namespace mvdid
