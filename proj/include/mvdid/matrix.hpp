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

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "mvdid/error.hpp"

namespace mvdid {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. Constructors that accept entry values
// reject NaN/Inf; element writes through operator() are unchecked, so code
// that fills a matrix incrementally re-validates at API boundaries where a
// contract requires it (see all_finite).
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (!std::isfinite(fill)) throw_data("Matrix: non-finite fill value");
  }

  Matrix(std::size_t rows, std::size_t cols, Vector entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows * cols)
      throw_dim("Matrix: entry count " + std::to_string(data_.size()) +
                " does not match " + std::to_string(rows) + "x" +
                std::to_string(cols));
    for (double v : data_)
      if (!std::isfinite(v)) throw_data("Matrix: non-finite entry");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw_dim("Matrix::from_rows: ragged rows");
      std::size_t j = 0;
      for (double v : row) {
        if (!std::isfinite(v)) throw_data("Matrix: non-finite entry");
        m(i, j++) = v;
      }
      ++i;
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  Vector& storage() { return data_; }
  const Vector& storage() const { return data_; }

 private:
  std::size_t rows_, cols_;
  Vector data_;
};

inline bool all_finite(const Matrix& m) {
  for (double v : m.storage())
    if (!std::isfinite(v)) return false;
  return true;
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw_dim(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) +
              "x" + std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
              "x" + std::to_string(b.cols()) + ")");
}

inline Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix add");
  Matrix r = a;
  for (std::size_t i = 0; i < r.storage().size(); ++i) r.storage()[i] += b.storage()[i];
  return r;
}

inline Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix subtract");
  Matrix r = a;
  for (std::size_t i = 0; i < r.storage().size(); ++i) r.storage()[i] -= b.storage()[i];
  return r;
}

inline Matrix operator*(double s, const Matrix& a) {
  Matrix r = a;
  for (double& v : r.storage()) v *= s;
  return r;
}

inline Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw_dim("matrix multiply: inner dimensions " + std::to_string(a.cols()) +
              " vs " + std::to_string(b.rows()));
  Matrix r(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double* ri = r.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = ai[k];
      if (aik == 0.0) continue;
      const double* bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ri[j] += aik * bk[j];
    }
  }
  return r;
}

inline Vector operator*(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) throw_dim("matrix-vector multiply: dimension mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += ai[j] * x[j];
    y[i] = acc;
  }
  return y;
}

inline Matrix transpose(const Matrix& a) {
  Matrix r(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(j, i) = a(i, j);
  return r;
}

inline double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.storage()) s += v * v;
  return std::sqrt(s);
}

inline double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.storage()) m = std::max(m, std::abs(v));
  return m;
}

inline Vector get_col(const Matrix& a, std::size_t j) {
  Vector c(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) c[i] = a(i, j);
  return c;
}

inline void set_col(Matrix& a, std::size_t j, const Vector& c) {
  if (c.size() != a.rows()) throw_dim("set_col: length mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) = c[i];
}

// Column-wise means of an N x d matrix.
inline Vector column_means(const Matrix& a) {
  if (a.rows() == 0) throw_data("column_means: empty matrix");
  Vector m(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) m[j] += ai[j];
  }
  for (double& v : m) v /= static_cast<double>(a.rows());
  return m;
}

// Subtracts v from every row.
inline Matrix subtract_row_vector(const Matrix& a, const Vector& v) {
  if (v.size() != a.cols()) throw_dim("subtract_row_vector: length mismatch");
  Matrix r = a;
  for (std::size_t i = 0; i < r.rows(); ++i) {
    double* ri = r.row(i);
    for (std::size_t j = 0; j < r.cols(); ++j) ri[j] -= v[j];
  }
  return r;
}

// Horizontal concatenation [a | b].
inline Matrix hcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw_dim("hcat: row counts differ");
  Matrix r(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) r(i, a.cols() + j) = b(i, j);
  }
  return r;
}

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw_dim("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

}  // namespace mvdid
