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
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "mvdid/corpus.hpp"
#include "mvdid/error.hpp"
#include "mvdid/matrix.hpp"
#include "mvdid/rng.hpp"

namespace mvdid {

// Synthetic two-view dialect corpus.
//
// Every utterance carries a shared latent vector z drawn around a per-class
// mean. Each view observes a fixed random linear image of z, plus a
// class-dependent offset that is only *partially* informative: view P pools
// classes {0,1},{2,3},{4,...} while view A pools {0},{1,2},{3,4},... — so
// neither view's private signal separates all classes, but together (and
// through z) they do. White noise with per-view scale completes the draw.
//
// Beyond the raw view matrices the generator materializes what the full
// pipeline ingests: a phone sequence whose anchor-bigram counts are an affine
// quantization of the raw P row, and a small stack of frame vectors jittered
// around the raw A row.
struct SynthConfig {
  std::size_t classes = 5;
  std::size_t n_per_class = 200;
  std::size_t shared_dim = 6;
  double noise_p = 1.0;
  double noise_a = 1.0;
  std::uint64_t seed = 1;

  double class_sep = 1.0;      // scale of per-class latent means
  double latent_spread = 1.0;  // within-class latent jitter
  double view_offset = 1.0;    // scale of the view-private class offsets
  std::size_t p_dim = 24;      // phone symbol inventory / raw P width
  std::size_t a_dim = 16;      // raw acoustic feature width
  std::size_t frames_per_utt = 20;
  double frame_jitter = 0.5;
  double count_base = 12.0;  // phone-count quantization: max(0, round(base + gain*x))
  double count_gain = 2.0;
};

struct SynthResult {
  Dataset dataset;             // ids, labels, phones; frames_ref filled by materialize
  Matrix x_p_raw;              // N x p_dim
  Matrix x_a_raw;              // N x a_dim
  std::vector<Matrix> frames;  // per record, frames_per_utt x a_dim
};

namespace detail {

inline std::string synth_label_name(std::size_t c, std::size_t classes) {
  if (classes == default_label_set().size()) return default_label_set()[c];
  char buf[32];
  std::snprintf(buf, sizeof buf, "D%02zu", c);
  return buf;
}

inline std::string synth_phone_name(std::size_t j) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%02zu", j);
  return buf;
}

// Phone sequence whose bigram statistics encode the raw P row: a run of
// (count_j + 1) copies of symbol j contributes the anchor bigram (j,j)
// exactly count_j times; run boundaries add one (j,j+1) bigram each, a
// class-independent constant pattern.
inline std::vector<std::string> synth_phones(const Matrix& x_p_raw, std::size_t row,
                                             const SynthConfig& cfg) {
  std::vector<std::string> seq;
  for (std::size_t j = 0; j < cfg.p_dim; ++j) {
    const double raw = cfg.count_base + cfg.count_gain * x_p_raw(row, j);
    const long long count = std::max(0LL, std::llround(raw));
    const std::string sym = synth_phone_name(j);
    for (long long t = 0; t < count + 1; ++t) seq.push_back(sym);
  }
  return seq;
}

}  // namespace detail

inline SynthResult synth_two_view(const SynthConfig& cfg) {
  if (cfg.classes < 2) throw_data("synth_two_view: need at least 2 classes");
  if (cfg.n_per_class < 1 || cfg.shared_dim < 1 || cfg.p_dim < 1 || cfg.a_dim < 1 ||
      cfg.frames_per_utt < 1)
    throw_data("synth_two_view: counts must be >= 1");
  if (cfg.noise_p < 0 || cfg.noise_a < 0 || cfg.frame_jitter < 0)
    throw_data("synth_two_view: noise scales must be >= 0");

  const std::size_t C = cfg.classes;
  const std::size_t N = C * cfg.n_per_class;
  Rng rng(cfg.seed);

  // Per-class latent means.
  Matrix mu(C, cfg.shared_dim);
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t d = 0; d < cfg.shared_dim; ++d) mu(c, d) = cfg.class_sep * rng.normal();

  // Fixed random view maps, scaled so row-image variance is O(1).
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(cfg.shared_dim));
  Matrix map_p(cfg.shared_dim, cfg.p_dim);
  for (double& v : map_p.storage()) v = map_scale * rng.normal();
  Matrix map_a(cfg.shared_dim, cfg.a_dim);
  for (double& v : map_a.storage()) v = map_scale * rng.normal();

  // View-private class offsets over pooled class groups.
  const auto group_p = [](std::size_t c) { return c / 2; };
  const auto group_a = [](std::size_t c) { return (c + 1) / 2; };
  const std::size_t n_groups_p = group_p(C - 1) + 1;
  const std::size_t n_groups_a = group_a(C - 1) + 1;
  Matrix offset_p(n_groups_p, cfg.p_dim);
  for (double& v : offset_p.storage()) v = cfg.view_offset * rng.normal();
  Matrix offset_a(n_groups_a, cfg.a_dim);
  for (double& v : offset_a.storage()) v = cfg.view_offset * rng.normal();

  SynthResult out;
  out.dataset.label_set.reserve(C);
  for (std::size_t c = 0; c < C; ++c)
    out.dataset.label_set.push_back(detail::synth_label_name(c, C));
  out.x_p_raw = Matrix(N, cfg.p_dim);
  out.x_a_raw = Matrix(N, cfg.a_dim);
  out.frames.reserve(N);

  Vector z(cfg.shared_dim);
  std::size_t row = 0;
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < cfg.n_per_class; ++i, ++row) {
      for (std::size_t d = 0; d < cfg.shared_dim; ++d)
        z[d] = mu(c, d) + cfg.latent_spread * rng.normal();
      for (std::size_t j = 0; j < cfg.p_dim; ++j) {
        double v = offset_p(group_p(c), j) + cfg.noise_p * rng.normal();
        for (std::size_t d = 0; d < cfg.shared_dim; ++d) v += z[d] * map_p(d, j);
        out.x_p_raw(row, j) = v;
      }
      for (std::size_t j = 0; j < cfg.a_dim; ++j) {
        double v = offset_a(group_a(c), j) + cfg.noise_a * rng.normal();
        for (std::size_t d = 0; d < cfg.shared_dim; ++d) v += z[d] * map_a(d, j);
        out.x_a_raw(row, j) = v;
      }
      Matrix fr(cfg.frames_per_utt, cfg.a_dim);
      for (std::size_t t = 0; t < cfg.frames_per_utt; ++t)
        for (std::size_t j = 0; j < cfg.a_dim; ++j)
          fr(t, j) = out.x_a_raw(row, j) + cfg.frame_jitter * rng.normal();
      out.frames.push_back(std::move(fr));

      UtteranceRecord r;
      char idbuf[64];
      std::snprintf(idbuf, sizeof idbuf, "utt-%s-%04zu", out.dataset.label_set[c].c_str(), i);
      r.id = idbuf;
      r.label = out.dataset.label_set[c];
      r.phones = detail::synth_phones(out.x_p_raw, row, cfg);
      out.dataset.records.push_back(std::move(r));
    }
  }
  return out;
}

// Convenience overload with the core knobs only.
inline SynthResult synth_two_view(std::size_t n_per_class, std::size_t classes,
                                  std::size_t shared_dim, double noise_p, double noise_a,
                                  std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_per_class = n_per_class;
  cfg.classes = classes;
  cfg.shared_dim = shared_dim;
  cfg.noise_p = noise_p;
  cfg.noise_a = noise_a;
  cfg.seed = seed;
  return synth_two_view(cfg);
}

// Write the generated corpus under `dir`: frame files in dir/frames/ and a
// manifest at dir/<manifest_name>, with frames referenced relatively.
// Returns the manifest path.
inline std::string materialize_synth(SynthResult& r, const std::string& dir,
                                     const std::string& manifest_name = "manifest.jsonl") {
  if (r.frames.size() != r.dataset.records.size())
    throw_data("materialize_synth: frames/records length mismatch");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "frames", ec);
  if (ec) throw_data("cannot create directory: " + (fs::path(dir) / "frames").string());
  for (std::size_t i = 0; i < r.dataset.records.size(); ++i) {
    auto& rec = r.dataset.records[i];
    const std::string rel = "frames/" + rec.id + ".mvf1";
    save_frames(r.frames[i], (fs::path(dir) / rel).string());
    rec.frames_ref = rel;
  }
  const std::string manifest_path = (fs::path(dir) / manifest_name).string();
  save_manifest(r.dataset, manifest_path);
  return manifest_path;
}

}  // namespace mvdid
