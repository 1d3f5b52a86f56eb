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

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mvdid/acoustic.hpp"
#include "mvdid/classifier.hpp"
#include "mvdid/config.hpp"
#include "mvdid/corpus.hpp"
#include "mvdid/discriminant.hpp"
#include "mvdid/error.hpp"
#include "mvdid/eval.hpp"
#include "mvdid/fusion.hpp"
#include "mvdid/matrix.hpp"
#include "mvdid/phonotactic.hpp"
#include "mvdid/rng.hpp"
#include "mvdid/serialize.hpp"
#include "mvdid/synth.hpp"

namespace mvdid {

// End-to-end driver. Each run trains both views, fuses them, and reports all
// seven systems side by side:
//
//   X_P            phonotactic VSM alone
//   X_A            acoustic VSM alone
//   Z_C            CCA-fused shared VSM
//   Z_C+LDA+WCCN   shared VSM after supervised post-processing
//   X_A+LDA+WCCN   acoustic VSM after the same post-processing
//   LDA-concat     concatenation of the two post-processed spaces
//   score-fusion   weighted combination of the X_P and X_A classifier scores
//
// Every matrix handed from one stage to the next is written to its MVF1
// artifact and read back before use. MVF1 stores f32, so this quantizes
// deliberately: a stage rerun later from the serialized artifact sees exactly
// the bytes the end-to-end run saw, making per-stage reruns bit-reproducible
// rather than merely close.

// Canonical artifact names inside the output directory.
inline constexpr const char* kLockFile = ".mvdid.lock";
inline constexpr const char* kVocabFile = "vocab.mvdm";
inline constexpr const char* kProjectorFile = "projector.mvdm";
inline constexpr const char* kUbmFile = "ubm.mvdm";
inline constexpr const char* kTvFile = "tv.mvdm";
inline constexpr const char* kCcaFile = "cca.mvdm";
inline constexpr const char* kLdaZcFile = "lda_zc.mvdm";
inline constexpr const char* kWccnZcFile = "wccn_zc.mvdm";
inline constexpr const char* kLdaXaFile = "lda_xa.mvdm";
inline constexpr const char* kWccnXaFile = "wccn_xa.mvdm";
inline constexpr const char* kResultsFile = "results.json";
inline constexpr const char* kReportFile = "report.txt";
inline constexpr const char* kBestConfusionFile = "cm_best.txt";

struct PipelineResult {
  std::vector<ResultRow> rows;              // seven systems, fixed order
  std::vector<ConfusionMatrix> confusions;  // parallel to rows
  std::size_t best_index = 0;  // highest test accuracy (first on ties)
  std::string best_system;
  std::string final_system;  // the system fusion.mode selects as the output
  std::string report_text;   // contents of report.txt
  std::string results_json;  // contents of results.json
};

// The six classifier-backed systems, in report order. The classifier for
// system i is seeded with mix_seed(seed, 100+i), and its feature matrices
// live in the listed artifacts, so a stage rerun and the end-to-end run
// train byte-identical models.
struct SystemSpec {
  const char* name;
  const char* clf_file;
  const char* train_file;
  const char* test_file;
};

inline constexpr std::array<SystemSpec, 6> kSystems = {{
    {"X_P", "clf_xp.mvdm", "xp_train.mvf1", "xp_test.mvf1"},
    {"X_A", "clf_xa.mvdm", "xa_train.mvf1", "xa_test.mvf1"},
    {"Z_C", "clf_zc.mvdm", "zc_train.mvf1", "zc_test.mvf1"},
    {"Z_C+LDA+WCCN", "clf_zc_lw.mvdm", "zc_lw_train.mvf1", "zc_lw_test.mvf1"},
    {"X_A+LDA+WCCN", "clf_xa_lw.mvdm", "xa_lw_train.mvf1", "xa_lw_test.mvf1"},
    {"LDA-concat", "clf_concat.mvdm", "concat_train.mvf1", "concat_test.mvf1"},
}};

inline constexpr const char* kScoreFusionName = "score-fusion";

inline std::string final_system_name(const std::string& fusion_mode) {
  if (fusion_mode == "feature") return "Z_C+LDA+WCCN";
  if (fusion_mode == "score") return kScoreFusionName;
  return "LDA-concat";  // "concat", validated upstream
}

namespace detail {

// Seed domains: model stages reuse their container tags, the synthetic
// corpus generator and its split get tags of their own, and the per-system
// classifiers live at 100+i so adding a stage never reshuffles them.
constexpr std::uint64_t kSynthGenTag = 9;
constexpr std::uint64_t kSynthSplitTag = 10;
constexpr std::uint64_t kClassifierTagBase = 100;

inline std::uint64_t stage_seed(std::uint64_t seed, StageTag tag) {
  return mix_seed(seed, static_cast<std::uint64_t>(tag));
}

}  // namespace detail

// Exclusive claim on an output directory for the lifetime of one run; the
// "x" open mode makes creation itself the atomic test-and-set.
class OutDirLock {
 public:
  explicit OutDirLock(const std::string& dir)
      : path_((std::filesystem::path(dir) / kLockFile).string()) {
    std::FILE* f = std::fopen(path_.c_str(), "wbx");
    if (!f)
      throw_data("output directory is locked by " + path_ +
                 "; if no other run is active, remove the lock file");
    std::fputs("mvdid run in progress\n", f);
    std::fclose(f);
  }
  ~OutDirLock() { std::remove(path_.c_str()); }
  OutDirLock(const OutDirLock&) = delete;
  OutDirLock& operator=(const OutDirLock&) = delete;

 private:
  std::string path_;
};

// Write a stage product and hand back what a later stage would read. All
// inter-stage matrices must pass through here (see the header comment).
inline Matrix stage_matrix(const Matrix& m, const std::string& path) {
  write_matrix_mvf1(m, path);
  return read_matrix_mvf1(path);
}

inline std::vector<std::size_t> to_size_labels(const std::vector<int>& labels) {
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (const int l : labels) out.push_back(static_cast<std::size_t>(l));
  return out;
}

inline std::vector<Matrix> load_all_frames(const Dataset& d,
                                           const std::string& manifest_path) {
  std::vector<Matrix> frames;
  frames.reserve(d.records.size());
  for (const auto& rec : d.records) {
    if (!rec.frames_ref)
      throw_data("record '" + rec.id +
                 "' has no frames reference; the acoustic view needs per-"
                 "utterance frame files (synth-data writes them)");
    frames.push_back(load_frames(resolve_frames_ref(manifest_path, *rec.frames_ref)));
  }
  return frames;
}

// Unit-L2 rows; a zero row (degenerate but representable) is left alone
// rather than divided into NaNs.
inline void length_normalize_rows(Matrix& x) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double q = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) q += x(i, j) * x(i, j);
    const double norm = std::sqrt(q);
    if (norm > 0.0)
      for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) /= norm;
  }
}

// Supervised post-processing pair, fit and applied in the configured order.
struct DiscriminantPair {
  LdaModel lda;
  WccnModel wccn;
};

inline DiscriminantPair fit_discriminant(const Matrix& x_train,
                                         const std::vector<std::size_t>& labels,
                                         const DiscriminantSection& dc) {
  DiscriminantPair pair;
  if (dc.order == "lda-wccn") {
    pair.lda = fit_lda(x_train, labels, dc.m, dc.lda_ridge);
    pair.wccn = fit_wccn(transform_lda(pair.lda, x_train), labels, dc.wccn_ridge);
  } else {  // "wccn-lda", validated upstream
    pair.wccn = fit_wccn(x_train, labels, dc.wccn_ridge);
    pair.lda = fit_lda(transform_wccn(pair.wccn, x_train), labels, dc.m, dc.lda_ridge);
  }
  return pair;
}

inline Matrix apply_discriminant(const DiscriminantPair& pair, const Matrix& x,
                                 const std::string& order) {
  if (order == "lda-wccn")
    return transform_wccn(pair.wccn, transform_lda(pair.lda, x));
  return transform_lda(pair.lda, transform_wccn(pair.wccn, x));
}

// Generate, split, and materialize a synthetic two-view corpus under `dir`
// (train/ and test/ subdirectories, each with a manifest and frame files).
struct SynthCorpusPaths {
  std::string train_manifest;
  std::string test_manifest;
};

inline SynthCorpusPaths generate_synth_corpus(const SynthSection& s,
                                              std::uint64_t seed,
                                              const std::string& dir) {
  SynthConfig sc;
  sc.classes = s.classes;
  sc.n_per_class = s.n_train_per_class + s.n_test_per_class;
  sc.shared_dim = s.shared_dim;
  sc.noise_p = s.noise_p;
  sc.noise_a = s.noise_a;
  sc.seed = mix_seed(seed, detail::kSynthGenTag);
  sc.class_sep = s.class_sep;
  sc.latent_spread = s.latent_spread;
  sc.view_offset = s.view_offset;
  sc.p_dim = s.p_dim;
  sc.a_dim = s.a_dim;
  sc.frames_per_utt = s.frames_per_utt;
  sc.frame_jitter = s.frame_jitter;
  sc.count_base = s.count_base;
  sc.count_gain = s.count_gain;
  SynthResult full = synth_two_view(sc);

  const double frac = static_cast<double>(s.n_test_per_class) /
                      static_cast<double>(sc.n_per_class);
  auto [train_ds, test_ds] =
      stratified_split(full.dataset, frac, mix_seed(seed, detail::kSynthSplitTag));

  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < full.dataset.records.size(); ++i)
    by_id.emplace(full.dataset.records[i].id, i);

  auto materialize = [&](Dataset& ds, const char* sub) {
    SynthResult part;
    part.dataset = std::move(ds);
    part.frames.reserve(part.dataset.records.size());
    for (const auto& rec : part.dataset.records)
      part.frames.push_back(full.frames[by_id.at(rec.id)]);
    return materialize_synth(part, (std::filesystem::path(dir) / sub).string());
  };
  SynthCorpusPaths paths;
  paths.train_manifest = materialize(train_ds, "train");
  paths.test_manifest = materialize(test_ds, "test");
  return paths;
}

// Build the seven-row result table from the six classifier probability
// matrices (in kSystems order) plus the score-level fusion of the first two.
// Shared by the end-to-end run and by `evaluate`, which re-scores serialized
// classifiers; both therefore produce byte-identical results files.
inline PipelineResult tabulate_results(const std::vector<Matrix>& probas,
                                       const std::vector<std::size_t>& dims,
                                       const std::vector<std::string>& truth,
                                       const PipelineConfig& cfg) {
  if (probas.size() != kSystems.size() || dims.size() != kSystems.size())
    throw_dim("tabulate_results: expected one probability matrix per system");
  PipelineResult result;
  for (std::size_t i = 0; i < kSystems.size(); ++i) {
    const ConfusionMatrix cm = confusion(
        truth, predict_from_scores(probas[i], cfg.label_set), cfg.label_set);
    result.rows.push_back({kSystems[i].name, dims[i], metrics(cm)});
    result.confusions.push_back(cm);
  }
  const Matrix fused =
      cfg.fusion.score_space == "log"
          ? score_fuse_log({probas[0], probas[1]}, cfg.fusion.score_weights)
          : score_fuse({probas[0], probas[1]}, cfg.fusion.score_weights);
  const ConfusionMatrix cm_fused =
      confusion(truth, predict_from_scores(fused, cfg.label_set), cfg.label_set);
  result.rows.push_back({kScoreFusionName, cfg.label_set.size(), metrics(cm_fused)});
  result.confusions.push_back(cm_fused);

  std::size_t best = 0;
  for (std::size_t i = 1; i < result.rows.size(); ++i)
    if (result.rows[i].metrics.accuracy > result.rows[best].metrics.accuracy) best = i;
  result.best_index = best;
  result.best_system = result.rows[best].system;
  result.final_system = final_system_name(cfg.fusion.mode);

  result.report_text = report(result.rows);
  nlohmann::json doc = nlohmann::json::parse(
      results_to_json(result.rows, result.confusions[best], result.best_system));
  doc["final_system"] = result.final_system;
  result.results_json = doc.dump(2) + "\n";
  return result;
}

// Write report.txt, results.json, and the best system's confusion matrix
// into the configured output directory.
inline void write_result_files(const PipelineConfig& cfg,
                               const PipelineResult& result) {
  namespace fs = std::filesystem;
  const auto out = [&](const char* name) {
    return (fs::path(cfg.paths.out_dir) / name).string();
  };
  detail::write_file_bytes(out(kReportFile), result.report_text);
  detail::write_file_bytes(out(kResultsFile), result.results_json);
  save_confusion_text(out(kBestConfusionFile), result.confusions[result.best_index]);
}

inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  validate_config(cfg);
  if (cfg.paths.train_manifest.empty())
    throw_config("run-pipeline: paths.train_manifest is required");
  if (cfg.paths.test_manifest.empty())
    throw_config("run-pipeline: paths.test_manifest is required");

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.paths.out_dir, ec);
  if (ec) throw_data("cannot create output directory: " + cfg.paths.out_dir);
  OutDirLock lock(cfg.paths.out_dir);
  const std::uint64_t hash = config_hash(cfg);
  const auto out = [&](const char* name) {
    return (fs::path(cfg.paths.out_dir) / name).string();
  };

  const Dataset train = load_manifest(cfg.paths.train_manifest, cfg.label_set);
  const Dataset test = load_manifest(cfg.paths.test_manifest, cfg.label_set);
  const std::vector<std::size_t> y_train = to_size_labels(train.label_indices());
  std::vector<std::string> truth;
  truth.reserve(test.records.size());
  for (const auto& rec : test.records) truth.push_back(*rec.label);

  // Phonotactic view: vocabulary, latent projector, X_P for both splits.
  const std::set<std::size_t> orders(cfg.phonotactic.orders.begin(),
                                     cfg.phonotactic.orders.end());
  const NgramVocab vocab = build_vocab(train, orders, cfg.phonotactic.d_cap);
  save_model(out(kVocabFile), vocab, hash, detail::stage_seed(cfg.seed, StageTag::Vocab));
  const TermDocMatrix counts_train = count_matrix(train, vocab);
  const PhonotacticProjector projector =
      fit_projector(counts_train, cfg.phonotactic.k, cfg.phonotactic.log_counts,
                    cfg.phonotactic.center);
  save_model(out(kProjectorFile), projector, hash,
             detail::stage_seed(cfg.seed, StageTag::Projector));
  const Matrix xp_train = stage_matrix(project(counts_train, projector), out("xp_train.mvf1"));
  const Matrix xp_test =
      stage_matrix(project(count_matrix(test, vocab), projector), out("xp_test.mvf1"));

  // Acoustic view: UBM, total-variability subspace, X_A for both splits.
  const std::vector<Matrix> frames_train = load_all_frames(train, cfg.paths.train_manifest);
  const std::vector<Matrix> frames_test = load_all_frames(test, cfg.paths.test_manifest);
  const GmmUbm ubm =
      train_ubm(frames_train, cfg.acoustic.g, cfg.acoustic.ubm_iters,
                detail::stage_seed(cfg.seed, StageTag::Ubm), cfg.acoustic.var_floor_scale);
  save_model(out(kUbmFile), ubm, hash, detail::stage_seed(cfg.seed, StageTag::Ubm));
  std::vector<BaumWelchStats> stats;
  stats.reserve(frames_train.size());
  for (const Matrix& f : frames_train) stats.push_back(accumulate_stats(f, ubm));
  const TvModel tv = train_tv(stats, ubm, cfg.acoustic.r, cfg.acoustic.tv_iters,
                              detail::stage_seed(cfg.seed, StageTag::Tv));
  save_model(out(kTvFile), tv, hash, detail::stage_seed(cfg.seed, StageTag::Tv));
  Matrix xa_train_full = build_acoustic_vsm(frames_train, ubm, tv);
  Matrix xa_test_full = build_acoustic_vsm(frames_test, ubm, tv);
  if (cfg.acoustic.length_norm) {
    length_normalize_rows(xa_train_full);
    length_normalize_rows(xa_test_full);
  }
  const Matrix xa_train = stage_matrix(xa_train_full, out("xa_train.mvf1"));
  const Matrix xa_test = stage_matrix(xa_test_full, out("xa_test.mvf1"));

  // Feature-space fusion: canonical projections and the shared VSM Z_C.
  const CcaModel cca = fit_cca(xp_train, xa_train, cfg.cca.c, cfg.cca.ridge);
  save_model(out(kCcaFile), cca, hash, detail::stage_seed(cfg.seed, StageTag::Cca));
  const Matrix zc_train = stage_matrix(transform(cca, xp_train, xa_train), out("zc_train.mvf1"));
  const Matrix zc_test = stage_matrix(transform(cca, xp_test, xa_test), out("zc_test.mvf1"));

  // Supervised post-processing of Z_C and X_A, plus their concatenation.
  const DiscriminantPair d_zc = fit_discriminant(zc_train, y_train, cfg.discriminant);
  save_model(out(kLdaZcFile), d_zc.lda, hash, detail::stage_seed(cfg.seed, StageTag::Lda));
  save_model(out(kWccnZcFile), d_zc.wccn, hash, detail::stage_seed(cfg.seed, StageTag::Wccn));
  const Matrix zc_lw_train = stage_matrix(
      apply_discriminant(d_zc, zc_train, cfg.discriminant.order), out("zc_lw_train.mvf1"));
  const Matrix zc_lw_test = stage_matrix(
      apply_discriminant(d_zc, zc_test, cfg.discriminant.order), out("zc_lw_test.mvf1"));

  const DiscriminantPair d_xa = fit_discriminant(xa_train, y_train, cfg.discriminant);
  save_model(out(kLdaXaFile), d_xa.lda, hash, detail::stage_seed(cfg.seed, StageTag::Lda));
  save_model(out(kWccnXaFile), d_xa.wccn, hash, detail::stage_seed(cfg.seed, StageTag::Wccn));
  const Matrix xa_lw_train = stage_matrix(
      apply_discriminant(d_xa, xa_train, cfg.discriminant.order), out("xa_lw_train.mvf1"));
  const Matrix xa_lw_test = stage_matrix(
      apply_discriminant(d_xa, xa_test, cfg.discriminant.order), out("xa_lw_test.mvf1"));

  const Matrix concat_train =
      stage_matrix(hcat(zc_lw_train, xa_lw_train), out("concat_train.mvf1"));
  const Matrix concat_test =
      stage_matrix(hcat(zc_lw_test, xa_lw_test), out("concat_test.mvf1"));

  // One softmax per system; score fusion reuses the single-view classifiers.
  const std::array<std::pair<const Matrix*, const Matrix*>, 6> features = {{
      {&xp_train, &xp_test},
      {&xa_train, &xa_test},
      {&zc_train, &zc_test},
      {&zc_lw_train, &zc_lw_test},
      {&xa_lw_train, &xa_lw_test},
      {&concat_train, &concat_test},
  }};

  std::vector<Matrix> probas;
  std::vector<std::size_t> dims;
  for (std::size_t i = 0; i < kSystems.size(); ++i) {
    const Matrix& train_x = *features[i].first;
    const Matrix& test_x = *features[i].second;
    TrainConfig tc = cfg.classifier;
    tc.seed = mix_seed(cfg.seed, detail::kClassifierTagBase + i);
    const SoftmaxModel clf = train_softmax(train_x, y_train, cfg.label_set, tc);
    save_model(out(kSystems[i].clf_file), clf, hash, tc.seed);
    probas.push_back(predict_proba(clf, test_x));
    dims.push_back(test_x.cols());
  }
  const PipelineResult result = tabulate_results(probas, dims, truth, cfg);
  write_result_files(cfg, result);
  return result;
}

}  // namespace mvdid
