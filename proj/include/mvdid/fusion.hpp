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

#include "mvdid/error.hpp"
#include "mvdid/matrix.hpp"
#include "mvdid/numerics.hpp"

namespace mvdid {

// Feature-space fusion of the two views by canonical correlation analysis:
// estimate paired projections phi_p, phi_a maximizing the correlation of the
// projected views, then build the shared space by projecting each view and
// concatenating. The estimator is the whitened cross-covariance SVD
//
//   C_pp^{-1/2} C_pa C_aa^{-1/2} = U S V^T,
//   phi_p = C_pp^{-1/2} U,  phi_a = C_aa^{-1/2} V,  correlations = diag(S),
//
// which is algebraically equivalent to the generalized eigenproblem
// C_pp^{-1} C_pa C_aa^{-1} C_ap phi = lambda phi with correlations = sqrt
// lambda, but needs only symmetric factorizations. A ridge added to both view
// covariances keeps the whitening defined when they are rank-deficient.

// Default shared dimensionality per view; real corpora use wide vocabularies
// where this is the operating point. Desk-scale work passes small c directly.
inline constexpr std::size_t kDefaultCcaDim = 300;

struct CovarianceSet {
  Matrix c_pp;    // p x p
  Matrix c_aa;    // q x q
  Matrix c_pa;    // p x q
  Vector mean_p;  // p
  Vector mean_a;  // q
};

struct CcaModel {
  Matrix phi_p;          // p x c
  Matrix phi_a;          // q x c
  Vector correlations;   // c, descending, each in [0, 1 + 1e-8]
  std::size_t c = 0;
  double ridge = 0.0;
  Vector mean_p;         // p, training column means
  Vector mean_a;         // q
};

// Sample means and (cross-)covariances of the two views, mean-centered,
// 1/(N-1) normalized. Rows are paired observations.
inline CovarianceSet covariances(const Matrix& x_p, const Matrix& x_a) {
  if (x_p.rows() != x_a.rows()) throw_dim("covariances: row counts differ");
  if (x_p.rows() < 2) throw_data("covariances: need at least 2 rows");
  CovarianceSet s;
  s.mean_p = column_means(x_p);
  s.mean_a = column_means(x_a);
  s.c_pp = cross_cov(x_p, x_p);
  s.c_aa = cross_cov(x_a, x_a);
  s.c_pa = cross_cov(x_p, x_a);
  return s;
}

// Fit the top-c canonical pairs. Both views are centered (means stored for
// transform-time reuse); `ridge` is added to both view covariances before
// whitening. Correlations above 1 + 1e-8 mean the whitening collapsed and are
// reported as a numeric error rather than clamped away.
inline CcaModel fit_cca(const Matrix& x_p, const Matrix& x_a, std::size_t c,
                        double ridge = kDefaultRidge) {
  if (x_p.rows() != x_a.rows()) throw_dim("fit_cca: row counts differ");
  if (x_p.rows() < 2) throw_data("fit_cca: need at least 2 rows");
  const std::size_t max_c = std::min(x_p.cols(), x_a.cols());
  if (c < 1 || c > max_c)
    throw_dim("fit_cca: c=" + std::to_string(c) + " out of range [1, " +
              std::to_string(max_c) + "]");
  if (ridge < 0.0) throw_data("fit_cca: ridge must be >= 0");

  const CovarianceSet cov = covariances(x_p, x_a);
  const Matrix w_p = inv_sqrt_psd(cov.c_pp, ridge);
  const Matrix w_a = inv_sqrt_psd(cov.c_aa, ridge);
  const SvdResult svd = truncated_svd(w_p * cov.c_pa * w_a, c);

  CcaModel m;
  m.phi_p = w_p * svd.u;
  m.phi_a = w_a * svd.v;
  m.correlations = svd.s;
  m.c = c;
  m.ridge = ridge;
  m.mean_p = cov.mean_p;
  m.mean_a = cov.mean_a;
  for (double rho : m.correlations)
    if (rho > 1.0 + 1e-8)
      throw_numeric("fit_cca: correlation " + std::to_string(rho) +
                    " exceeds 1; increase ridge");
  return m;
}

// Shared representation: center each view with the stored training means,
// project, and concatenate. Columns [0, c) are the phonotactic canonical
// variates, [c, 2c) the acoustic ones.
inline Matrix transform(const CcaModel& m, const Matrix& x_p,
                        const Matrix& x_a) {
  if (x_p.rows() != x_a.rows()) throw_dim("transform: row counts differ");
  if (x_p.cols() != m.phi_p.rows() || x_a.cols() != m.phi_a.rows())
    throw_dim("transform: column dims do not match the fitted model");
  const Matrix z_p = subtract_row_vector(x_p, m.mean_p) * m.phi_p;
  const Matrix z_a = subtract_row_vector(x_a, m.mean_a) * m.phi_a;
  return hcat(z_p, z_a);
}

inline const Vector& canonical_correlations(const CcaModel& m) {
  return m.correlations;
}

}  // namespace mvdid
