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
#include <string>
#include <vector>

#include "mvdid/corpus.hpp"
#include "mvdid/error.hpp"
#include "mvdid/matrix.hpp"
#include "mvdid/numerics.hpp"
#include "mvdid/rng.hpp"

namespace mvdid {

// Acoustic vector space: a diagonal-covariance GMM background model over
// frame features, per-utterance zeroth/first-order statistics against it,
// and a low-rank total-variability map m = u + T v whose posterior mean v
// is the utterance representation.

struct GmmUbm {
  Vector weights;    // G, sums to 1
  Matrix means;      // G x F
  Matrix variances;  // G x F, diagonal covariances, floored
  Vector var_floor;  // per-dimension floor actually applied (length F)

  std::size_t g() const { return means.rows(); }
  std::size_t f() const { return means.cols(); }
};

struct BaumWelchStats {
  Vector n;  // G soft occupancies
  Matrix f;  // G x F first-order sums, centered on the UBM means
};

struct TvModel {
  Matrix t;  // (G*F) x R
  Vector u;  // stacked UBM means, length G*F
  std::size_t r = 0;
};

using IVector = Vector;  // length R

namespace detail {

inline void check_ubm(const GmmUbm& ubm, const char* who) {
  if (ubm.g() == 0 || ubm.f() == 0) throw_data(std::string(who) + ": empty UBM");
  if (ubm.weights.size() != ubm.g() || ubm.variances.rows() != ubm.g() ||
      ubm.variances.cols() != ubm.f())
    throw_dim(std::string(who) + ": inconsistent UBM shapes");
}

// Per-frame responsibilities and log-likelihood, computed in the log domain.
class GmmScorer {
 public:
  explicit GmmScorer(const GmmUbm& ubm) : ubm_(ubm), log_const_(ubm.g()) {
    constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)
    for (std::size_t g = 0; g < ubm.g(); ++g) {
      double c = std::log(std::max(ubm.weights[g], 1e-300));
      for (std::size_t j = 0; j < ubm.f(); ++j)
        c -= 0.5 * (kLog2Pi + std::log(ubm.variances(g, j)));
      log_const_[g] = c;
    }
  }

  // Fills gamma (size G) with posteriors for frame `row` of x; returns the
  // frame's log-likelihood under the mixture.
  double posteriors(const Matrix& x, std::size_t row, Vector& gamma) const {
    const std::size_t G = ubm_.g(), F = ubm_.f();
    gamma.resize(G);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < G; ++g) {
      double q = 0.0;
      for (std::size_t j = 0; j < F; ++j) {
        const double d = x(row, j) - ubm_.means(g, j);
        q += d * d / ubm_.variances(g, j);
      }
      gamma[g] = log_const_[g] - 0.5 * q;
      peak = std::max(peak, gamma[g]);
    }
    double sum = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      gamma[g] = std::exp(gamma[g] - peak);
      sum += gamma[g];
    }
    for (std::size_t g = 0; g < G; ++g) gamma[g] /= sum;
    return peak + std::log(sum);
  }

 private:
  const GmmUbm& ubm_;
  Vector log_const_;
};

inline Matrix pool_frames(const std::vector<Matrix>& frames, const char* who) {
  if (frames.empty()) throw_data(std::string(who) + ": no frame matrices");
  const std::size_t F = frames[0].cols();
  std::size_t total = 0;
  for (const Matrix& m : frames) {
    if (m.cols() != F) throw_dim(std::string(who) + ": frame matrices disagree on feature dim");
    total += m.rows();
  }
  Matrix pooled(total, F);
  std::size_t row = 0;
  for (const Matrix& m : frames)
    for (std::size_t i = 0; i < m.rows(); ++i, ++row)
      for (std::size_t j = 0; j < F; ++j) pooled(row, j) = m(i, j);
  return pooled;
}

// Seeded k-means++ initialization followed by Lloyd refinement. Returns the
// final assignment through `assign`.
inline Matrix kmeans(const Matrix& x, std::size_t g, Rng& rng, std::vector<std::size_t>& assign) {
  const std::size_t N = x.rows(), F = x.cols();
  Matrix centers(g, F);

  // k-means++ seeding: next center drawn proportionally to squared distance.
  Vector d2(N, std::numeric_limits<double>::infinity());
  std::size_t first = rng.below(N);
  for (std::size_t j = 0; j < F; ++j) centers(0, j) = x(first, j);
  for (std::size_t c = 1; c < g; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double q = 0.0;
      for (std::size_t j = 0; j < F; ++j) {
        const double d = x(i, j) - centers(c - 1, j);
        q += d * d;
      }
      d2[i] = std::min(d2[i], q);
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng.below(N);  // all points coincide with a chosen center
    } else {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = N - 1;
      for (std::size_t i = 0; i < N; ++i) {
        acc += d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    }
    for (std::size_t j = 0; j < F; ++j) centers(c, j) = x(pick, j);
  }

  assign.assign(N, 0);
  for (int sweep = 0; sweep < 10; ++sweep) {
    bool changed = false;
    for (std::size_t i = 0; i < N; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < g; ++c) {
        double q = 0.0;
        for (std::size_t j = 0; j < F; ++j) {
          const double d = x(i, j) - centers(c, j);
          q += d * d;
        }
        if (q < best_d) {
          best_d = q;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    std::vector<double> counts(g, 0.0);
    Matrix sums(g, F);
    for (std::size_t i = 0; i < N; ++i) {
      counts[assign[i]] += 1.0;
      for (std::size_t j = 0; j < F; ++j) sums(assign[i], j) += x(i, j);
    }
    for (std::size_t c = 0; c < g; ++c) {
      if (counts[c] == 0.0) {
        // Re-seed an empty cluster at the point farthest from its center.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < N; ++i) {
          double q = 0.0;
          for (std::size_t j = 0; j < F; ++j) {
            const double d = x(i, j) - centers(assign[i], j);
            q += d * d;
          }
          if (q > far_d) {
            far_d = q;
            far = i;
          }
        }
        for (std::size_t j = 0; j < F; ++j) centers(c, j) = x(far, j);
        changed = true;
        continue;
      }
      for (std::size_t j = 0; j < F; ++j) centers(c, j) = sums(c, j) / counts[c];
    }
    if (!changed) break;
  }
  return centers;
}

}  // namespace detail

// Total log-likelihood of a frame matrix under the mixture.
inline double gmm_log_likelihood(const GmmUbm& ubm, const Matrix& frames) {
  detail::check_ubm(ubm, "gmm_log_likelihood");
  if (frames.cols() != ubm.f()) throw_dim("gmm_log_likelihood: feature dim mismatch");
  const detail::GmmScorer scorer(ubm);
  Vector gamma;
  double ll = 0.0;
  for (std::size_t t = 0; t < frames.rows(); ++t) ll += scorer.posteriors(frames, t, gamma);
  return ll;
}

// EM training of the diagonal-covariance background model. Means start from
// seeded k-means; `iters` = 0 returns that initialization. Per-dimension
// variance floor = var_floor_scale * global feature variance. When
// ll_history is given it receives iters+1 entries: the log-likelihood of the
// initialization and after every EM update.
inline GmmUbm train_ubm(const std::vector<Matrix>& frames, std::size_t g, std::size_t iters,
                        std::uint64_t seed, double var_floor_scale = 1e-4,
                        std::vector<double>* ll_history = nullptr) {
  if (g < 1) throw_data("train_ubm: need at least one component");
  if (var_floor_scale <= 0.0) throw_data("train_ubm: variance floor scale must be > 0");
  const Matrix x = detail::pool_frames(frames, "train_ubm");
  const std::size_t N = x.rows(), F = x.cols();
  if (N < g)
    throw_data("train_ubm: " + std::to_string(N) + " frames cannot support " +
               std::to_string(g) + " components");

  // Global per-dimension variance sets the floor.
  const Vector global_mean = column_means(x);
  Vector global_var(F, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < F; ++j) {
      const double d = x(i, j) - global_mean[j];
      global_var[j] += d * d;
    }
  GmmUbm ubm;
  ubm.var_floor.resize(F);
  for (std::size_t j = 0; j < F; ++j) {
    global_var[j] /= static_cast<double>(N);
    ubm.var_floor[j] = var_floor_scale * std::max(global_var[j], 1e-10);
  }

  // Initialization from k-means clusters.
  Rng rng(seed);
  std::vector<std::size_t> assign;
  ubm.means = detail::kmeans(x, g, rng, assign);
  ubm.weights.assign(g, 0.0);
  ubm.variances = Matrix(g, F);
  {
    std::vector<double> counts(g, 0.0);
    for (std::size_t i = 0; i < N; ++i) counts[assign[i]] += 1.0;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < F; ++j) {
        const double d = x(i, j) - ubm.means(assign[i], j);
        ubm.variances(assign[i], j) += d * d;
      }
    for (std::size_t c = 0; c < g; ++c) {
      ubm.weights[c] = counts[c] / static_cast<double>(N);
      for (std::size_t j = 0; j < F; ++j) {
        double v = counts[c] >= 2.0 ? ubm.variances(c, j) / counts[c] : global_var[j];
        ubm.variances(c, j) = std::max(v, ubm.var_floor[j]);
      }
    }
  }

  Vector gamma;
  for (std::size_t it = 0; it < iters; ++it) {
    const detail::GmmScorer scorer(ubm);
    Vector occ(g, 0.0);
    Matrix sum1(g, F), sum2(g, F);
    double ll = 0.0;
    for (std::size_t t = 0; t < N; ++t) {
      ll += scorer.posteriors(x, t, gamma);
      for (std::size_t c = 0; c < g; ++c) {
        occ[c] += gamma[c];
        for (std::size_t j = 0; j < F; ++j) {
          sum1(c, j) += gamma[c] * x(t, j);
          sum2(c, j) += gamma[c] * x(t, j) * x(t, j);
        }
      }
    }
    if (ll_history) ll_history->push_back(ll);

    for (std::size_t c = 0; c < g; ++c) {
      if (occ[c] < 1e-8) {
        // Collapsed component: re-seed from the widest surviving one.
        std::size_t donor = 0;
        double donor_spread = -1.0;
        for (std::size_t d = 0; d < g; ++d) {
          if (d == c) continue;
          double spread = 0.0;
          for (std::size_t j = 0; j < F; ++j) spread += ubm.variances(d, j);
          if (spread > donor_spread) {
            donor_spread = spread;
            donor = d;
          }
        }
        warn("train_ubm: component " + std::to_string(c) +
             " collapsed; re-seeding from component " + std::to_string(donor));
        for (std::size_t j = 0; j < F; ++j) {
          ubm.means(c, j) =
              ubm.means(donor, j) + std::sqrt(ubm.variances(donor, j)) * rng.normal();
          ubm.variances(c, j) = ubm.variances(donor, j);
        }
        const double w = 0.5 * ubm.weights[donor];
        ubm.weights[donor] = w;
        ubm.weights[c] = w;
        continue;
      }
      ubm.weights[c] = occ[c] / static_cast<double>(N);
      for (std::size_t j = 0; j < F; ++j) {
        const double mu = sum1(c, j) / occ[c];
        ubm.means(c, j) = mu;
        ubm.variances(c, j) = std::max(sum2(c, j) / occ[c] - mu * mu, ubm.var_floor[j]);
      }
    }
    double wsum = 0.0;
    for (const double w : ubm.weights) wsum += w;
    for (double& w : ubm.weights) w /= wsum;
  }
  if (ll_history) ll_history->push_back(gmm_log_likelihood(ubm, x));
  return ubm;
}

// Zeroth- and first-order statistics of one utterance against the UBM:
// n_g = sum_t gamma_t(g), f_g = sum_t gamma_t(g) (x_t - mu_g).
inline BaumWelchStats accumulate_stats(const Matrix& frames, const GmmUbm& ubm) {
  detail::check_ubm(ubm, "accumulate_stats");
  if (frames.cols() != ubm.f())
    throw_dim("accumulate_stats: feature dim " + std::to_string(frames.cols()) +
              " != UBM dim " + std::to_string(ubm.f()));
  const detail::GmmScorer scorer(ubm);
  BaumWelchStats s;
  s.n.assign(ubm.g(), 0.0);
  s.f = Matrix(ubm.g(), ubm.f());
  Vector gamma;
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    scorer.posteriors(frames, t, gamma);
    for (std::size_t g = 0; g < ubm.g(); ++g) {
      s.n[g] += gamma[g];
      for (std::size_t j = 0; j < ubm.f(); ++j)
        s.f(g, j) += gamma[g] * (frames(t, j) - ubm.means(g, j));
    }
  }
  return s;
}

namespace detail {

inline void check_stats(const BaumWelchStats& s, const GmmUbm& ubm, const char* who) {
  if (s.n.size() != ubm.g() || s.f.rows() != ubm.g() || s.f.cols() != ubm.f())
    throw_dim(std::string(who) + ": statistics shape does not match the UBM");
}

// Posterior precision L = I + T' Sigma^{-1} N T and projected statistics
// rhs = T' Sigma^{-1} f for one utterance.
inline void posterior_system(const BaumWelchStats& s, const Matrix& t, const GmmUbm& ubm,
                             Matrix& l, Vector& rhs) {
  const std::size_t G = ubm.g(), F = ubm.f(), R = t.cols();
  l = Matrix::identity(R);
  rhs.assign(R, 0.0);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t j = 0; j < F; ++j) {
      const std::size_t row = g * F + j;
      const double inv_var = 1.0 / ubm.variances(g, j);
      const double w = s.n[g] * inv_var;
      const double fw = s.f(g, j) * inv_var;
      for (std::size_t a = 0; a < R; ++a) {
        const double ta = t(row, a);
        rhs[a] += fw * ta;
        for (std::size_t b = a; b < R; ++b) l(a, b) += w * ta * t(row, b);
      }
    }
  }
  for (std::size_t a = 0; a < R; ++a)
    for (std::size_t b = 0; b < a; ++b) l(a, b) = l(b, a);
}

}  // namespace detail

// Posterior-mean utterance representation v = (I + T'S^{-1}NT)^{-1} T'S^{-1}f.
inline IVector extract_ivector(const BaumWelchStats& s, const TvModel& tv, const GmmUbm& ubm) {
  detail::check_ubm(ubm, "extract_ivector");
  detail::check_stats(s, ubm, "extract_ivector");
  if (tv.t.rows() != ubm.g() * ubm.f() || tv.t.cols() != tv.r)
    throw_dim("extract_ivector: total-variability shape mismatch");
  Matrix l;
  Vector rhs;
  detail::posterior_system(s, tv.t, ubm, l, rhs);
  return detail::solve_spd(l, rhs, "extract_ivector");
}

// EM estimation of the total-variability matrix. The expectation step forms
// each utterance's posterior (mean and covariance); the maximization step
// solves one R x R least-squares system per mixture component. T starts from
// seeded small random entries unless t_init is supplied.
inline TvModel train_tv(const std::vector<BaumWelchStats>& stats, const GmmUbm& ubm,
                        std::size_t r, std::size_t iters, std::uint64_t seed,
                        const Matrix* t_init = nullptr) {
  detail::check_ubm(ubm, "train_tv");
  if (stats.empty()) throw_data("train_tv: no statistics");
  for (const auto& s : stats) detail::check_stats(s, ubm, "train_tv");
  const std::size_t G = ubm.g(), F = ubm.f(), GF = G * F;
  if (r < 1) throw_data("train_tv: rank must be >= 1");
  if (r > GF)
    throw_dim("train_tv: rank " + std::to_string(r) + " exceeds supervector size " +
              std::to_string(GF));

  TvModel tv;
  tv.r = r;
  tv.u.resize(GF);
  for (std::size_t g = 0; g < G; ++g)
    for (std::size_t j = 0; j < F; ++j) tv.u[g * F + j] = ubm.means(g, j);

  if (t_init) {
    if (t_init->rows() != GF || t_init->cols() != r)
      throw_dim("train_tv: t_init shape mismatch");
    tv.t = *t_init;
  } else {
    Rng rng(seed);
    tv.t = Matrix(GF, r);
    for (std::size_t g = 0; g < G; ++g)
      for (std::size_t j = 0; j < F; ++j) {
        const double scale = 0.1 * std::sqrt(ubm.variances(g, j));
        for (std::size_t a = 0; a < r; ++a) tv.t(g * F + j, a) = scale * rng.normal();
      }
  }

  Matrix l;
  Vector rhs;
  for (std::size_t it = 0; it < iters; ++it) {
    // Accumulators: per component, A_g = sum_i n_ig E[vv'], B_g = sum_i f_ig vbar'.
    std::vector<Matrix> a_acc(G, Matrix(r, r));
    std::vector<Matrix> b_acc(G, Matrix(F, r));
    for (const auto& s : stats) {
      detail::posterior_system(s, tv.t, ubm, l, rhs);
      const Matrix l_inv = detail::invert_spd(l, "train_tv");
      Vector vbar(r, 0.0);
      for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b < r; ++b) vbar[a] += l_inv(a, b) * rhs[b];
      for (std::size_t g = 0; g < G; ++g) {
        for (std::size_t a = 0; a < r; ++a)
          for (std::size_t b = 0; b < r; ++b)
            a_acc[g](a, b) += s.n[g] * (l_inv(a, b) + vbar[a] * vbar[b]);
        for (std::size_t j = 0; j < F; ++j)
          for (std::size_t a = 0; a < r; ++a) b_acc[g](j, a) += s.f(g, j) * vbar[a];
      }
    }
    for (std::size_t g = 0; g < G; ++g) {
      Matrix a = a_acc[g];
      bool ridged = false;
      double trace = 0.0;
      for (std::size_t i = 0; i < r; ++i) trace += a(i, i);
      Matrix a_inv;
      try {
        a_inv = detail::invert_spd(a, "train_tv");
      } catch (const Error&) {
        ridged = true;
        const double ridge = 1e-8 * std::max(trace / static_cast<double>(r), 1.0);
        for (std::size_t i = 0; i < r; ++i) a(i, i) += ridge;
        a_inv = detail::invert_spd(a, "train_tv");
      }
      if (ridged)
        warn("train_tv: singular update system for component " + std::to_string(g) +
             "; ridge applied");
      for (std::size_t j = 0; j < F; ++j)
        for (std::size_t a2 = 0; a2 < r; ++a2) {
          double v = 0.0;
          for (std::size_t b = 0; b < r; ++b) v += b_acc[g](j, b) * a_inv(b, a2);
          tv.t(g * F + j, a2) = v;
        }
    }
  }
  if (!all_finite(tv.t)) throw_numeric("train_tv: estimation diverged");
  return tv;
}

// m = u + T v.
inline Vector reconstruct_supervector(const TvModel& tv, const IVector& v) {
  if (v.size() != tv.r) throw_dim("reconstruct_supervector: i-vector length mismatch");
  Vector m = tv.u;
  for (std::size_t row = 0; row < tv.t.rows(); ++row)
    for (std::size_t a = 0; a < tv.r; ++a) m[row] += tv.t(row, a) * v[a];
  return m;
}

// Rows = per-utterance i-vectors, in input order.
inline Matrix build_acoustic_vsm(const std::vector<Matrix>& frames, const GmmUbm& ubm,
                                 const TvModel& tv) {
  if (frames.empty()) throw_data("build_acoustic_vsm: no utterances");
  Matrix x(frames.size(), tv.r);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const IVector v = extract_ivector(accumulate_stats(frames[i], ubm), tv, ubm);
    for (std::size_t j = 0; j < tv.r; ++j) x(i, j) = v[j];
  }
  return x;
}

// Dataset overload: loads each record's frames relative to the manifest.
inline Matrix build_acoustic_vsm(const Dataset& d, const GmmUbm& ubm, const TvModel& tv,
                                 const std::string& manifest_path) {
  if (d.records.empty()) throw_data("build_acoustic_vsm: empty dataset");
  std::vector<Matrix> frames;
  frames.reserve(d.records.size());
  for (const auto& rec : d.records) {
    if (!rec.frames_ref)
      throw_data("build_acoustic_vsm: record '" + rec.id + "' has no frames reference");
    frames.push_back(load_frames(resolve_frames_ref(manifest_path, *rec.frames_ref)));
  }
  return build_acoustic_vsm(frames, ubm, tv);
}

}  // namespace mvdid
