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
#include <string>
#include <vector>

#include "mvdid/acoustic.hpp"
#include "mvdid/classifier.hpp"
#include "mvdid/detail/binio.hpp"
#include "mvdid/discriminant.hpp"
#include "mvdid/error.hpp"
#include "mvdid/fusion.hpp"
#include "mvdid/matrix.hpp"
#include "mvdid/phonotactic.hpp"

namespace mvdid {

// Model container ("MVDM"): one trained stage per file, written little-endian
// and byte-for-byte reproducible. The header carries the stage tag plus the
// configuration hash and seed the model was trained under, so downstream
// stages can refuse artifacts from a different configuration.
//
// Layout: magic "MVDM" | version u32 | stage u32 | config_hash u64 | seed u64
// followed by the stage payload. Matrices are u32 rows, u32 cols, then
// row-major f64 entries bit-cast to u64; vectors are u32 length plus f64
// entries; strings are u32 length plus raw bytes; booleans one strict byte.
// Payloads are validated for shape consistency and finiteness on both save
// and load, so a corrupted or hand-edited file is rejected rather than fed
// into later stages.

enum class StageTag : std::uint32_t {
  Vocab = 1,
  Projector = 2,
  Ubm = 3,
  Tv = 4,
  Cca = 5,
  Lda = 6,
  Wccn = 7,
  Softmax = 8,
};

struct ContainerMeta {
  StageTag stage = StageTag::Vocab;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

inline const char* stage_name(StageTag tag) {
  switch (tag) {
    case StageTag::Vocab: return "vocab";
    case StageTag::Projector: return "projector";
    case StageTag::Ubm: return "ubm";
    case StageTag::Tv: return "tv";
    case StageTag::Cca: return "cca";
    case StageTag::Lda: return "lda";
    case StageTag::Wccn: return "wccn";
    case StageTag::Softmax: return "softmax";
  }
  return "unknown";
}

namespace detail {

constexpr char kModelMagic[4] = {'M', 'V', 'D', 'M'};
constexpr std::uint32_t kModelVersion = 1;

// -- encoding -------------------------------------------------------------

inline void put_vector(std::string& out, const Vector& v) {
  put_u32(out, static_cast<std::uint32_t>(v.size()));
  for (const double x : v) put_f64(out, x);
}

inline void put_matrix(std::string& out, const Matrix& m) {
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (const double x : m.storage()) put_f64(out, x);
}

inline void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

inline void put_bool(std::string& out, bool b) {
  out.push_back(b ? '\x01' : '\x00');
}

// -- decoding -------------------------------------------------------------

// Bounds pre-checks use remaining()/8 so a forged header cannot trigger a
// huge allocation before the truncation is noticed.
inline Vector read_vector(ByteReader& r, const std::string& who) {
  const std::size_t n = r.u32();
  if (n > r.remaining() / 8) throw_data(who + ": truncated vector");
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = r.f64();
  return v;
}

inline Matrix read_matrix(ByteReader& r, const std::string& who) {
  const std::size_t rows = r.u32();
  const std::size_t cols = r.u32();
  const std::size_t count = rows * cols;  // both < 2^32, no overflow in 64-bit
  if (count > r.remaining() / 8) throw_data(who + ": truncated matrix");
  Vector entries(count);
  for (std::size_t i = 0; i < count; ++i) entries[i] = r.f64();
  return Matrix(rows, cols, std::move(entries));
}

inline std::string read_string(ByteReader& r, const std::string& who) {
  const std::size_t n = r.u32();
  if (n > r.remaining()) throw_data(who + ": truncated string");
  return r.raw(n);
}

inline bool read_bool(ByteReader& r, const std::string& who) {
  const std::string b = r.raw(1);
  if (b[0] == '\x00') return false;
  if (b[0] == '\x01') return true;
  throw_data(who + ": malformed boolean byte");
}

// -- validation -----------------------------------------------------------

inline void require_finite(const Vector& v, const std::string& who,
                           const char* field) {
  for (const double x : v)
    if (!std::isfinite(x))
      throw_data(who + ": non-finite value in " + field);
}

inline void require_finite(const Matrix& m, const std::string& who,
                           const char* field) {
  require_finite(m.storage(), who, field);
}

inline void validate_model(const NgramVocab& m, const std::string& who) {
  if (m.terms.empty()) throw_data(who + ": vocabulary has no terms");
  if (m.orders.empty()) throw_data(who + ": vocabulary lists no n-gram orders");
  if (m.index.size() != m.terms.size())
    throw_data(who + ": vocabulary terms are not unique");
  for (const auto& [term, col] : m.index) {
    if (col >= m.terms.size() || m.terms[col] != term)
      throw_data(who + ": vocabulary index disagrees with term list");
  }
}

inline void validate_model(const PhonotacticProjector& m,
                           const std::string& who) {
  if (m.pi.cols() != m.k)
    throw_data(who + ": projector width does not match k");
  if (m.singular_values.size() != m.k)
    throw_data(who + ": singular value count does not match k");
  if (m.center) {
    if (m.mean.size() != m.pi.rows())
      throw_data(who + ": centering mean length does not match vocabulary size");
  } else if (!m.mean.empty()) {
    throw_data(who + ": centering mean present but centering is disabled");
  }
  require_finite(m.pi, who, "projection");
  require_finite(m.singular_values, who, "singular values");
  require_finite(m.mean, who, "mean");
}

inline void validate_model(const GmmUbm& m, const std::string& who) {
  const std::size_t g = m.means.rows(), f = m.means.cols();
  if (g == 0 || f == 0) throw_data(who + ": empty UBM");
  if (m.variances.rows() != g || m.variances.cols() != f)
    throw_data(who + ": UBM variance shape does not match means");
  if (m.weights.size() != g)
    throw_data(who + ": UBM weight count does not match component count");
  if (m.var_floor.size() != f)
    throw_data(who + ": UBM variance floor length does not match feature dim");
  require_finite(m.weights, who, "weights");
  require_finite(m.means, who, "means");
  require_finite(m.variances, who, "variances");
  require_finite(m.var_floor, who, "variance floor");
}

inline void validate_model(const TvModel& m, const std::string& who) {
  if (m.t.cols() != m.r)
    throw_data(who + ": total-variability width does not match rank");
  if (m.u.size() != m.t.rows())
    throw_data(who + ": stacked mean length does not match matrix height");
  require_finite(m.t, who, "subspace");
  require_finite(m.u, who, "stacked means");
}

inline void validate_model(const CcaModel& m, const std::string& who) {
  if (m.phi_p.cols() != m.c || m.phi_a.cols() != m.c)
    throw_data(who + ": projection width does not match c");
  if (m.correlations.size() != m.c)
    throw_data(who + ": correlation count does not match c");
  if (m.mean_p.size() != m.phi_p.rows() || m.mean_a.size() != m.phi_a.rows())
    throw_data(who + ": view mean length does not match projection height");
  require_finite(m.phi_p, who, "phonotactic projection");
  require_finite(m.phi_a, who, "acoustic projection");
  require_finite(m.correlations, who, "correlations");
  require_finite(m.mean_p, who, "phonotactic mean");
  require_finite(m.mean_a, who, "acoustic mean");
}

inline void validate_model(const LdaModel& m, const std::string& who) {
  if (m.w.cols() != m.m) throw_data(who + ": projection width does not match m");
  if (m.class_means.cols() != m.w.rows())
    throw_data(who + ": class mean width does not match input dim");
  if (m.global_mean.size() != m.w.rows())
    throw_data(who + ": global mean length does not match input dim");
  require_finite(m.w, who, "projection");
  require_finite(m.class_means, who, "class means");
  require_finite(m.global_mean, who, "global mean");
}

inline void validate_model(const WccnModel& m, const std::string& who) {
  if (m.b.rows() != m.b.cols()) throw_data(who + ": WCCN transform not square");
  require_finite(m.b, who, "transform");
}

inline void validate_model(const SoftmaxModel& m, const std::string& who) {
  if (m.bias.size() != m.w.cols())
    throw_data(who + ": bias length does not match class count");
  if (m.label_set.size() != m.w.cols())
    throw_data(who + ": label count does not match class count");
  require_finite(m.w, who, "weights");
  require_finite(m.bias, who, "bias");
}

// -- payloads -------------------------------------------------------------

inline void put_payload(std::string& out, const NgramVocab& m) {
  put_u32(out, static_cast<std::uint32_t>(m.orders.size()));
  for (const std::size_t o : m.orders) put_u32(out, static_cast<std::uint32_t>(o));
  put_u32(out, static_cast<std::uint32_t>(m.terms.size()));
  for (const std::string& t : m.terms) put_string(out, t);
  put_u64(out, m.vocab_id);
}

inline NgramVocab read_payload(ByteReader& r, const std::string& who,
                               NgramVocab*) {
  NgramVocab m;
  const std::size_t n_orders = r.u32();
  for (std::size_t i = 0; i < n_orders; ++i) {
    if (!m.orders.insert(r.u32()).second)
      throw_data(who + ": duplicate n-gram order");
  }
  const std::size_t n_terms = r.u32();
  for (std::size_t i = 0; i < n_terms; ++i) {
    m.terms.push_back(read_string(r, who));
    m.index.emplace(m.terms.back(), static_cast<std::uint32_t>(i));
  }
  m.vocab_id = r.u64();
  return m;
}

inline void put_payload(std::string& out, const PhonotacticProjector& m) {
  put_matrix(out, m.pi);
  put_vector(out, m.singular_values);
  put_u32(out, static_cast<std::uint32_t>(m.k));
  put_bool(out, m.log_counts);
  put_bool(out, m.center);
  put_vector(out, m.mean);
  put_u64(out, m.vocab_id);
}

inline PhonotacticProjector read_payload(ByteReader& r, const std::string& who,
                                         PhonotacticProjector*) {
  PhonotacticProjector m;
  m.pi = read_matrix(r, who);
  m.singular_values = read_vector(r, who);
  m.k = r.u32();
  m.log_counts = read_bool(r, who);
  m.center = read_bool(r, who);
  m.mean = read_vector(r, who);
  m.vocab_id = r.u64();
  return m;
}

inline void put_payload(std::string& out, const GmmUbm& m) {
  put_vector(out, m.weights);
  put_matrix(out, m.means);
  put_matrix(out, m.variances);
  put_vector(out, m.var_floor);
}

inline GmmUbm read_payload(ByteReader& r, const std::string& who, GmmUbm*) {
  GmmUbm m;
  m.weights = read_vector(r, who);
  m.means = read_matrix(r, who);
  m.variances = read_matrix(r, who);
  m.var_floor = read_vector(r, who);
  return m;
}

inline void put_payload(std::string& out, const TvModel& m) {
  put_matrix(out, m.t);
  put_vector(out, m.u);
  put_u32(out, static_cast<std::uint32_t>(m.r));
}

inline TvModel read_payload(ByteReader& r, const std::string& who, TvModel*) {
  TvModel m;
  m.t = read_matrix(r, who);
  m.u = read_vector(r, who);
  m.r = r.u32();
  return m;
}

inline void put_payload(std::string& out, const CcaModel& m) {
  put_matrix(out, m.phi_p);
  put_matrix(out, m.phi_a);
  put_vector(out, m.correlations);
  put_u32(out, static_cast<std::uint32_t>(m.c));
  put_f64(out, m.ridge);
  put_vector(out, m.mean_p);
  put_vector(out, m.mean_a);
}

inline CcaModel read_payload(ByteReader& r, const std::string& who, CcaModel*) {
  CcaModel m;
  m.phi_p = read_matrix(r, who);
  m.phi_a = read_matrix(r, who);
  m.correlations = read_vector(r, who);
  m.c = r.u32();
  m.ridge = r.f64();
  m.mean_p = read_vector(r, who);
  m.mean_a = read_vector(r, who);
  return m;
}

inline void put_payload(std::string& out, const LdaModel& m) {
  put_matrix(out, m.w);
  put_u32(out, static_cast<std::uint32_t>(m.m));
  put_matrix(out, m.class_means);
  put_vector(out, m.global_mean);
  put_f64(out, m.ridge);
}

inline LdaModel read_payload(ByteReader& r, const std::string& who, LdaModel*) {
  LdaModel m;
  m.w = read_matrix(r, who);
  m.m = r.u32();
  m.class_means = read_matrix(r, who);
  m.global_mean = read_vector(r, who);
  m.ridge = r.f64();
  return m;
}

inline void put_payload(std::string& out, const WccnModel& m) {
  put_matrix(out, m.b);
  put_f64(out, m.ridge);
}

inline WccnModel read_payload(ByteReader& r, const std::string& who,
                              WccnModel*) {
  WccnModel m;
  m.b = read_matrix(r, who);
  m.ridge = r.f64();
  return m;
}

inline void put_payload(std::string& out, const SoftmaxModel& m) {
  put_matrix(out, m.w);
  put_vector(out, m.bias);
  put_u32(out, static_cast<std::uint32_t>(m.label_set.size()));
  for (const std::string& l : m.label_set) put_string(out, l);
}

inline SoftmaxModel read_payload(ByteReader& r, const std::string& who,
                                 SoftmaxModel*) {
  SoftmaxModel m;
  m.w = read_matrix(r, who);
  m.bias = read_vector(r, who);
  const std::size_t n = r.u32();
  for (std::size_t i = 0; i < n; ++i) m.label_set.push_back(read_string(r, who));
  return m;
}

template <typename ModelT>
constexpr StageTag stage_of();
template <> constexpr StageTag stage_of<NgramVocab>() { return StageTag::Vocab; }
template <> constexpr StageTag stage_of<PhonotacticProjector>() { return StageTag::Projector; }
template <> constexpr StageTag stage_of<GmmUbm>() { return StageTag::Ubm; }
template <> constexpr StageTag stage_of<TvModel>() { return StageTag::Tv; }
template <> constexpr StageTag stage_of<CcaModel>() { return StageTag::Cca; }
template <> constexpr StageTag stage_of<LdaModel>() { return StageTag::Lda; }
template <> constexpr StageTag stage_of<WccnModel>() { return StageTag::Wccn; }
template <> constexpr StageTag stage_of<SoftmaxModel>() { return StageTag::Softmax; }

inline ContainerMeta read_header(ByteReader& r, const std::string& who) {
  const std::string magic = r.raw(4);
  if (magic != std::string(kModelMagic, 4))
    throw_data(who + ": not a model container (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kModelVersion)
    throw_data(who + ": unsupported container version " + std::to_string(version));
  const std::uint32_t tag = r.u32();
  if (tag < 1 || tag > 8)
    throw_data(who + ": unknown stage tag " + std::to_string(tag));
  ContainerMeta meta;
  meta.stage = static_cast<StageTag>(tag);
  meta.config_hash = r.u64();
  meta.seed = r.u64();
  return meta;
}

template <typename ModelT>
ModelT load_model(const std::string& path, ContainerMeta* meta_out) {
  const std::string bytes = read_file_bytes(path);
  ByteReader r(bytes, path);
  const ContainerMeta meta = read_header(r, path);
  const StageTag want = stage_of<ModelT>();
  if (meta.stage != want)
    throw_data(path + ": container holds a " + stage_name(meta.stage) +
               " model, expected " + stage_name(want));
  ModelT m = read_payload(r, path, static_cast<ModelT*>(nullptr));
  r.expect_exhausted();
  validate_model(m, path);
  if (meta_out) *meta_out = meta;
  return m;
}

}  // namespace detail

// Save a trained model with its provenance header. The same call shape works
// for every stage; the tag is inferred from the model type.
template <typename ModelT>
void save_model(const std::string& path, const ModelT& model,
                std::uint64_t config_hash, std::uint64_t seed) {
  detail::validate_model(model, path);
  std::string out;
  out.append(detail::kModelMagic, 4);
  detail::put_u32(out, detail::kModelVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(detail::stage_of<ModelT>()));
  detail::put_u64(out, config_hash);
  detail::put_u64(out, seed);
  detail::put_payload(out, model);
  detail::write_file_bytes(path, out);
}

// Read just the provenance header; the payload is not decoded.
inline ContainerMeta peek_container(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes, path);
  return detail::read_header(r, path);
}

inline NgramVocab load_vocab(const std::string& path, ContainerMeta* meta = nullptr) {
  return detail::load_model<NgramVocab>(path, meta);
}
inline PhonotacticProjector load_projector(const std::string& path,
                                           ContainerMeta* meta = nullptr) {
  return detail::load_model<PhonotacticProjector>(path, meta);
}
inline GmmUbm load_ubm(const std::string& path, ContainerMeta* meta = nullptr) {
  return detail::load_model<GmmUbm>(path, meta);
}
inline TvModel load_tv(const std::string& path, ContainerMeta* meta = nullptr) {
  return detail::load_model<TvModel>(path, meta);
}
inline CcaModel load_cca(const std::string& path, ContainerMeta* meta = nullptr) {
  return detail::load_model<CcaModel>(path, meta);
}
inline LdaModel load_lda(const std::string& path, ContainerMeta* meta = nullptr) {
  return detail::load_model<LdaModel>(path, meta);
}
inline WccnModel load_wccn(const std::string& path, ContainerMeta* meta = nullptr) {
  return detail::load_model<WccnModel>(path, meta);
}
inline SoftmaxModel load_softmax(const std::string& path,
                                 ContainerMeta* meta = nullptr) {
  return detail::load_model<SoftmaxModel>(path, meta);
}

}  // namespace mvdid
