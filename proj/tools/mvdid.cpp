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

// mvdid — two-view dialect identification pipeline driver.
//
// Each subcommand is one stage of the pipeline (or the whole of it). Stages
// exchange data only through files in the output directory: models in MVDM
// containers, feature matrices in MVF1, so any stage can be rerun in
// isolation and reproduces what an end-to-end run would have computed.
// Inputs default to their canonical artifact names under --out and can be
// redirected with --stage-input name=path.

#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvdid/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using StageInputs = std::map<std::string, std::string>;

StageInputs parse_stage_inputs(const std::vector<std::string>& raw) {
  StageInputs inputs;
  for (const std::string& s : raw) {
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
      mvdid::throw_config("--stage-input expects name=path, got \"" + s + "\"");
    if (!inputs.emplace(s.substr(0, eq), s.substr(eq + 1)).second)
      mvdid::throw_config("--stage-input repeats name \"" + s.substr(0, eq) + "\"");
  }
  return inputs;
}

void check_known_inputs(const StageInputs& inputs,
                        const std::set<std::string>& accepted,
                        const char* subcommand) {
  for (const auto& [name, path] : inputs) {
    if (!accepted.count(name)) {
      std::string list;
      for (const std::string& a : accepted) list += (list.empty() ? "" : ", ") + a;
      mvdid::throw_config(std::string(subcommand) + ": unknown --stage-input name \"" +
                          name + "\" (accepted: " + (list.empty() ? "none" : list) + ")");
    }
  }
}

// Canonical artifact file for a logical stage-input name.
std::string default_artifact(const std::string& name) {
  static const std::set<std::string> models = {
      "vocab",   "projector", "ubm",       "tv",        "cca",
      "lda_zc",  "wccn_zc",   "lda_xa",    "wccn_xa",   "clf_xp",
      "clf_xa",  "clf_zc",    "clf_zc_lw", "clf_xa_lw", "clf_concat"};
  if (name == "confusion") return mvdid::kBestConfusionFile;
  return name + (models.count(name) ? ".mvdm" : ".mvf1");
}

// Which subcommand produces a given logical input; used in error messages.
std::string producer_of(const std::string& name) {
  if (name == "vocab") return "build-vocab";
  if (name == "projector" || name.rfind("xp_", 0) == 0) return "featurize-phono";
  if (name == "ubm") return "train-ubm";
  if (name == "tv") return "train-tv";
  if (name.rfind("xa_l", 0) == 0 || name.rfind("concat_", 0) == 0 ||
      name.rfind("zc_l", 0) == 0 || name.rfind("lda_", 0) == 0 ||
      name.rfind("wccn_", 0) == 0)
    return "fit-lda-wccn";
  if (name.rfind("xa_", 0) == 0) return "extract-ivectors";
  if (name == "cca" || name.rfind("zc_", 0) == 0) return "fit-cca";
  if (name.rfind("clf_", 0) == 0) return "train-clf";
  if (name == "confusion") return "run-pipeline or evaluate";
  return "an earlier stage";
}

std::string resolve_input(const mvdid::PipelineConfig& cfg, const StageInputs& inputs,
                          const std::string& name) {
  std::string path;
  const auto it = inputs.find(name);
  if (it != inputs.end())
    path = it->second;
  else
    path = (fs::path(cfg.paths.out_dir) / default_artifact(name)).string();
  if (!fs::exists(path))
    mvdid::throw_data("missing " + name + " artifact at " + path + " (produced by " +
                      producer_of(name) + "; run that first or pass --stage-input " +
                      name + "=PATH)");
  return path;
}

std::string out_path(const mvdid::PipelineConfig& cfg, const char* name) {
  return (fs::path(cfg.paths.out_dir) / name).string();
}

void ensure_out_dir(const mvdid::PipelineConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.paths.out_dir, ec);
  if (ec) mvdid::throw_data("cannot create output directory: " + cfg.paths.out_dir);
}

mvdid::Dataset load_train(const mvdid::PipelineConfig& cfg, const char* sub) {
  if (cfg.paths.train_manifest.empty())
    mvdid::throw_config(std::string(sub) + ": paths.train_manifest is required");
  return mvdid::load_manifest(cfg.paths.train_manifest, cfg.label_set);
}

mvdid::Dataset load_test(const mvdid::PipelineConfig& cfg, const char* sub) {
  if (cfg.paths.test_manifest.empty())
    mvdid::throw_config(std::string(sub) + ": paths.test_manifest is required");
  return mvdid::load_manifest(cfg.paths.test_manifest, cfg.label_set);
}

std::string logical_name(const char* artifact_file) {
  std::string s = artifact_file;
  return s.substr(0, s.rfind('.'));
}

// ---- subcommands ----------------------------------------------------------

void cmd_build_vocab(const mvdid::PipelineConfig& cfg, const StageInputs& inputs) {
  check_known_inputs(inputs, {}, "build-vocab");
  ensure_out_dir(cfg);
  mvdid::OutDirLock lock(cfg.paths.out_dir);
  const mvdid::Dataset train = load_train(cfg, "build-vocab");
  const std::set<std::size_t> orders(cfg.phonotactic.orders.begin(),
                                     cfg.phonotactic.orders.end());
  const mvdid::NgramVocab vocab =
      mvdid::build_vocab(train, orders, cfg.phonotactic.d_cap);
  const std::string path = out_path(cfg, mvdid::kVocabFile);
  mvdid::save_model(path, vocab, mvdid::config_hash(cfg),
                    mvdid::detail::stage_seed(cfg.seed, mvdid::StageTag::Vocab));
  std::printf("vocab: %s (%zu terms)\n", path.c_str(), vocab.size());
}

void cmd_featurize_phono(const mvdid::PipelineConfig& cfg, const StageInputs& inputs) {
  check_known_inputs(inputs, {"vocab", "projector"}, "featurize-phono");
  ensure_out_dir(cfg);
  mvdid::OutDirLock lock(cfg.paths.out_dir);
  const mvdid::Dataset train = load_train(cfg, "featurize-phono");
  const mvdid::Dataset test = load_test(cfg, "featurize-phono");
  const mvdid::NgramVocab vocab = mvdid::load_vocab(resolve_input(cfg, inputs, "vocab"));
  const mvdid::TermDocMatrix counts_train = mvdid::count_matrix(train, vocab);

  mvdid::PhonotacticProjector projector;
  if (inputs.count("projector")) {
    projector = mvdid::load_projector(resolve_input(cfg, inputs, "projector"));
  } else {
    projector = mvdid::fit_projector(counts_train, cfg.phonotactic.k,
                                     cfg.phonotactic.log_counts, cfg.phonotactic.center);
    mvdid::save_model(out_path(cfg, mvdid::kProjectorFile), projector,
                      mvdid::config_hash(cfg),
                      mvdid::detail::stage_seed(cfg.seed, mvdid::StageTag::Projector));
    std::printf("projector: %s (k=%zu)\n", out_path(cfg, mvdid::kProjectorFile).c_str(),
                projector.k);
  }
  mvdid::write_matrix_mvf1(mvdid::project(counts_train, projector),
                           out_path(cfg, "xp_train.mvf1"));
  mvdid::write_matrix_mvf1(mvdid::project(mvdid::count_matrix(test, vocab), projector),
                           out_path(cfg, "xp_test.mvf1"));
  std::printf("features: %s, %s\n", out_path(cfg, "xp_train.mvf1").c_str(),
              out_path(cfg, "xp_test.mvf1").c_str());
}

void cmd_train_ubm(const mvdid::PipelineConfig& cfg, const StageInputs& inputs) {
  check_known_inputs(inputs, {}, "train-ubm");
  ensure_out_dir(cfg);
  mvdid::OutDirLock lock(cfg.paths.out_dir);
  const mvdid::Dataset train = load_train(cfg, "train-ubm");
  const std::vector<mvdid::Matrix> frames =
      mvdid::load_all_frames(train, cfg.paths.train_manifest);
  const mvdid::GmmUbm ubm =
      mvdid::train_ubm(frames, cfg.acoustic.g, cfg.acoustic.ubm_iters,
                       mvdid::detail::stage_seed(cfg.seed, mvdid::StageTag::Ubm),
                       cfg.acoustic.var_floor_scale);
  const std::string path = out_path(cfg, mvdid::kUbmFile);
  mvdid::save_model(path, ubm, mvdid::config_hash(cfg),
                    mvdid::detail::stage_seed(cfg.seed, mvdid::StageTag::Ubm));
  std::printf("ubm: %s (%zu components)\n", path.c_str(), ubm.g());
}

void cmd_train_tv(const mvdid::PipelineConfig& cfg, const StageInputs& inputs) {
  check_known_inputs(inputs, {"ubm"}, "train-tv");
  ensure_out_dir(cfg);
  mvdid::OutDirLock lock(cfg.paths.out_dir);
  const mvdid::GmmUbm ubm = mvdid::load_ubm(resolve_input(cfg, inputs, "ubm"));
  const mvdid::Dataset train = load_train(cfg, "train-tv");
  const std::vector<mvdid::Matrix> frames =
      mvdid::load_all_frames(train, cfg.paths.train_manifest);
  std::vector<mvdid::BaumWelchStats> stats;
  stats.reserve(frames.size());
  for (const mvdid::Matrix& f : frames) stats.push_back(mvdid::accumulate_stats(f, ubm));
  const mvdid::TvModel tv =
      mvdid::train_tv(stats, ubm, cfg.acoustic.r, cfg.acoustic.tv_iters,
                      mvdid::detail::stage_seed(cfg.seed, mvdid::StageTag::Tv));
  const std::string path = out_path(cfg, mvdid::kTvFile);
  mvdid::save_model(path, tv, mvdid::config_hash(cfg),
                    mvdid::detail::stage_seed(cfg.seed, mvdid::StageTag::Tv));
  std::printf("tv: %s (rank %zu)\n", path.c_str(), tv.r);
}

void cmd_extract_ivectors(const mvdid::PipelineConfig& cfg, const StageInputs& inputs) {
  check_known_inputs(inputs, {"ubm", "tv"}, "extract-ivectors");
  ensure_out_dir(cfg);
  mvdid::OutDirLock lock(cfg.paths.out_dir);
  const mvdid::GmmUbm ubm = mvdid::load_ubm(resolve_input(cfg, inputs, "ubm"));
  const mvdid::TvModel tv = mvdid::load_tv(resolve_input(cfg, inputs, "tv"));
  const mvdid::Dataset train = load_train(cfg, "extract-ivectors");
  const mvdid::Dataset test = load_test(cfg, "extract-ivectors");
  mvdid::Matrix xa_train = mvdid::build_acoustic_vsm(
      mvdid::load_all_frames(train, cfg.paths.train_manifest), ubm, tv);
  mvdid::Matrix xa_test = mvdid::build_acoustic_vsm(
      mvdid::load_all_frames(test, cfg.paths.test_manifest), ubm, tv);
  if (cfg.acoustic.length_norm) {
    mvdid::length_normalize_rows(xa_train);
    mvdid::length_normalize_rows(xa_test);
  }
  mvdid::write_matrix_mvf1(xa_train, out_path(cfg, "xa_train.mvf1"));
  mvdid::write_matrix_mvf1(xa_test, out_path(cfg, "xa_test.mvf1"));
  std::printf("features: %s, %s\n", out_path(cfg, "xa_train.mvf1").c_str(),
              out_path(cfg, "xa_test.mvf1").c_str());
}

void cmd_fit_cca(const mvdid::PipelineConfig& cfg, const StageInputs& inputs) {
  check_known_inputs(inputs, {"cca", "xp_train", "xp_test", "xa_train", "xa_test"},
                     "fit-cca");
  ensure_out_dir(cfg);
  mvdid::OutDirLock lock(cfg.paths.out_dir);
  const mvdid::Matrix xp_train =
      mvdid::read_matrix_mvf1(resolve_input(cfg, inputs, "xp_train"));
  const mvdid::Matrix xa_train =
      mvdid::read_matrix_mvf1(resolve_input(cfg, inputs, "xa_train"));
  const mvdid::Matrix xp_test =
      mvdid::read_matrix_mvf1(resolve_input(cfg, inputs, "xp_test"));
  const mvdid::Matrix xa_test =
      mvdid::read_matrix_mvf1(resolve_input(cfg, inputs, "xa_test"));

  mvdid::CcaModel cca;
  if (inputs.count("cca")) {
    cca = mvdid::load_cca(resolve_input(cfg, inputs, "cca"));
  } else {
    cca = mvdid::fit_cca(xp_train, xa_train, cfg.cca.c, cfg.cca.ridge);
    mvdid::save_model(out_path(cfg, mvdid::kCcaFile), cca, mvdid::config_hash(cfg),
                      mvdid::detail::stage_seed(cfg.seed, mvdid::StageTag::Cca));
    std::printf("cca: %s (c=%zu, top correlation %.6f)\n",
                out_path(cfg, mvdid::kCcaFile).c_str(), cca.c,
                cca.correlations.empty() ? 0.0 : cca.correlations.front());
  }
  mvdid::write_matrix_mvf1(mvdid::transform(cca, xp_train, xa_train),
                           out_path(cfg, "zc_train.mvf1"));
  mvdid::write_matrix_mvf1(mvdid::transform(cca, xp_test, xa_test),
                           out_path(cfg, "zc_test.mvf1"));
  std::printf("features: %s, %s\n", out_path(cfg, "zc_train.mvf1").c_str(),
              out_path(cfg, "zc_test.mvf1").c_str());
}

void cmd_fit_lda_wccn(const mvdid::PipelineConfig& cfg, const StageInputs& inputs) {
  check_known_inputs(inputs,
                     {"lda_zc", "wccn_zc", "lda_xa", "wccn_xa", "zc_train", "zc_test",
                      "xa_train", "xa_test"},
                     "fit-lda-wccn");
  ensure_out_dir(cfg);
  mvdid::OutDirLock lock(cfg.paths.out_dir);
  const mvdid::Matrix zc_train =
      mvdid::read_matrix_mvf1(resolve_input(cfg, inputs, "zc_train"));
  const mvdid::Matrix zc_test =
      mvdid::read_matrix_mvf1(resolve_input(cfg, inputs, "zc_test"));
  const mvdid::Matrix xa_train =
      mvdid::read_matrix_mvf1(resolve_input(cfg, inputs, "xa_train"));
  const mvdid::Matrix xa_test =
      mvdid::read_matrix_mvf1(resolve_input(cfg, inputs, "xa_test"));

  const int given = static_cast<int>(inputs.count("lda_zc")) + inputs.count("wccn_zc") +
                    inputs.count("lda_xa") + inputs.count("wccn_xa");
  mvdid::DiscriminantPair d_zc, d_xa;
  if (given == 4) {
    d_zc.lda = mvdid::load_lda(resolve_input(cfg, inputs, "lda_zc"));
    d_zc.wccn = mvdid::load_wccn(resolve_input(cfg, inputs, "wccn_zc"));
    d_xa.lda = mvdid::load_lda(resolve_input(cfg, inputs, "lda_xa"));
    d_xa.wccn = mvdid::load_wccn(resolve_input(cfg, inputs, "wccn_xa"));
  } else if (given == 0) {
    const mvdid::Dataset train = load_train(cfg, "fit-lda-wccn");
    const std::vector<std::size_t> y = mvdid::to_size_labels(train.label_indices());
    if (y.size() != zc_train.rows())
      mvdid::throw_dim("fit-lda-wccn: training manifest has " +
                       std::to_string(y.size()) + " records but zc_train has " +
                       std::to_string(zc_train.rows()) + " rows");
    d_zc = mvdid::fit_discriminant(zc_train, y, cfg.discriminant);
    d_xa = mvdid::fit_discriminant(xa_train, y, cfg.discriminant);
    const std::uint64_t hash = mvdid::config_hash(cfg);
    mvdid::save_model(out_path(cfg, mvdid::kLdaZcFile), d_zc.lda, hash,
                      mvdid::detail::stage_seed(cfg.seed, mvdid::StageTag::Lda));
    mvdid::save_model(out_path(cfg, mvdid::kWccnZcFile), d_zc.wccn, hash,
                      mvdid::detail::stage_seed(cfg.seed, mvdid::StageTag::Wccn));
    mvdid::save_model(out_path(cfg, mvdid::kLdaXaFile), d_xa.lda, hash,
                      mvdid::detail::stage_seed(cfg.seed, mvdid::StageTag::Lda));
    mvdid::save_model(out_path(cfg, mvdid::kWccnXaFile), d_xa.wccn, hash,
                      mvdid::detail::stage_seed(cfg.seed, mvdid::StageTag::Wccn));
    std::printf("models: %s, %s, %s, %s\n", out_path(cfg, mvdid::kLdaZcFile).c_str(),
                out_path(cfg, mvdid::kWccnZcFile).c_str(),
                out_path(cfg, mvdid::kLdaXaFile).c_str(),
                out_path(cfg, mvdid::kWccnXaFile).c_str());
  } else {
    mvdid::throw_config(
        "fit-lda-wccn: pass all four of lda_zc, wccn_zc, lda_xa, wccn_xa to apply "
        "existing models, or none to fit them");
  }

  const std::string& order = cfg.discriminant.order;
  const mvdid::Matrix zc_lw_train = mvdid::apply_discriminant(d_zc, zc_train, order);
  const mvdid::Matrix zc_lw_test = mvdid::apply_discriminant(d_zc, zc_test, order);
  const mvdid::Matrix xa_lw_train = mvdid::apply_discriminant(d_xa, xa_train, order);
  const mvdid::Matrix xa_lw_test = mvdid::apply_discriminant(d_xa, xa_test, order);
  mvdid::write_matrix_mvf1(zc_lw_train, out_path(cfg, "zc_lw_train.mvf1"));
  mvdid::write_matrix_mvf1(zc_lw_test, out_path(cfg, "zc_lw_test.mvf1"));
  mvdid::write_matrix_mvf1(xa_lw_train, out_path(cfg, "xa_lw_train.mvf1"));
  mvdid::write_matrix_mvf1(xa_lw_test, out_path(cfg, "xa_lw_test.mvf1"));
  mvdid::write_matrix_mvf1(mvdid::hcat(zc_lw_train, xa_lw_train),
                           out_path(cfg, "concat_train.mvf1"));
  mvdid::write_matrix_mvf1(mvdid::hcat(zc_lw_test, xa_lw_test),
                           out_path(cfg, "concat_test.mvf1"));
  std::printf("features: %s .. %s\n", out_path(cfg, "zc_lw_train.mvf1").c_str(),
              out_path(cfg, "concat_test.mvf1").c_str());
}

void cmd_train_clf(const mvdid::PipelineConfig& cfg, const StageInputs& inputs) {
  std::set<std::string> accepted;
  for (const auto& sys : mvdid::kSystems) accepted.insert(logical_name(sys.train_file));
  check_known_inputs(inputs, accepted, "train-clf");
  ensure_out_dir(cfg);
  mvdid::OutDirLock lock(cfg.paths.out_dir);
  const mvdid::Dataset train = load_train(cfg, "train-clf");
  const std::vector<std::size_t> y = mvdid::to_size_labels(train.label_indices());
  const std::uint64_t hash = mvdid::config_hash(cfg);
  for (std::size_t i = 0; i < mvdid::kSystems.size(); ++i) {
    const mvdid::Matrix x = mvdid::read_matrix_mvf1(
        resolve_input(cfg, inputs, logical_name(mvdid::kSystems[i].train_file)));
    if (x.rows() != y.size())
      mvdid::throw_dim(std::string("train-clf: ") + mvdid::kSystems[i].train_file +
                       " has " + std::to_string(x.rows()) +
                       " rows but the training manifest has " +
                       std::to_string(y.size()) + " records");
    mvdid::TrainConfig tc = cfg.classifier;
    tc.seed = mvdid::mix_seed(cfg.seed, 100 + i);
    const mvdid::SoftmaxModel clf = mvdid::train_softmax(x, y, cfg.label_set, tc);
    mvdid::save_model(out_path(cfg, mvdid::kSystems[i].clf_file), clf, hash, tc.seed);
    std::printf("classifier: %s (%s, d=%zu)\n",
                out_path(cfg, mvdid::kSystems[i].clf_file).c_str(),
                mvdid::kSystems[i].name, x.cols());
  }
}

void cmd_evaluate(const mvdid::PipelineConfig& cfg, const StageInputs& inputs,
                  bool force) {
  std::set<std::string> accepted = {"confusion"};
  for (const auto& sys : mvdid::kSystems) {
    accepted.insert(logical_name(sys.clf_file));
    accepted.insert(logical_name(sys.test_file));
  }
  check_known_inputs(inputs, accepted, "evaluate");

  if (inputs.count("confusion")) {
    // Fixture mode: score an existing confusion matrix and print the metrics.
    const mvdid::ConfusionMatrix cm =
        mvdid::load_confusion_text(resolve_input(cfg, inputs, "confusion"));
    const mvdid::Metrics m = mvdid::metrics(cm);
    nlohmann::json doc;
    doc["labels"] = cm.labels;
    doc["total"] = cm.total();
    doc["accuracy"] = m.accuracy;
    doc["macro_precision"] = m.macro_precision;
    doc["macro_recall"] = m.macro_recall;
    doc["per_class"] = nlohmann::json::array();
    for (std::size_t i = 0; i < cm.labels.size(); ++i) {
      nlohmann::json row;
      row["label"] = cm.labels[i];
      row["precision"] = m.per_class[i].precision;
      row["recall"] = m.per_class[i].recall;
      doc["per_class"].push_back(row);
    }
    std::printf("%s\n", doc.dump(2).c_str());
    return;
  }

  // Model mode: re-score the serialized classifiers on the test features and
  // rewrite the results files. Artifacts from another configuration are
  // refused unless --force.
  ensure_out_dir(cfg);
  mvdid::OutDirLock lock(cfg.paths.out_dir);
  const mvdid::Dataset test = load_test(cfg, "evaluate");
  std::vector<std::string> truth;
  truth.reserve(test.records.size());
  for (const auto& rec : test.records) truth.push_back(*rec.label);

  const std::uint64_t hash = mvdid::config_hash(cfg);
  std::vector<mvdid::Matrix> probas;
  std::vector<std::size_t> dims;
  for (const auto& sys : mvdid::kSystems) {
    const mvdid::Matrix x =
        mvdid::read_matrix_mvf1(resolve_input(cfg, inputs, logical_name(sys.test_file)));
    mvdid::ContainerMeta meta;
    const mvdid::SoftmaxModel clf =
        mvdid::load_softmax(resolve_input(cfg, inputs, logical_name(sys.clf_file)), &meta);
    if (meta.config_hash != hash && !force)
      mvdid::throw_data(std::string(sys.clf_file) +
                        " was trained under a different configuration (its hash does "
                        "not match this config); pass --force to evaluate anyway");
    if (clf.label_set != cfg.label_set)
      mvdid::throw_data(std::string(sys.clf_file) +
                        " was trained with a different label set than this config");
    probas.push_back(mvdid::predict_proba(clf, x));
    dims.push_back(x.cols());
  }
  const mvdid::PipelineResult result = mvdid::tabulate_results(probas, dims, truth, cfg);
  mvdid::write_result_files(cfg, result);
  std::printf("%s", result.report_text.c_str());
  std::printf("best: %s  final: %s\nresults: %s\n", result.best_system.c_str(),
              result.final_system.c_str(), out_path(cfg, mvdid::kResultsFile).c_str());
}

void cmd_synth_data(const mvdid::PipelineConfig& cfg, const StageInputs& inputs) {
  check_known_inputs(inputs, {}, "synth-data");
  ensure_out_dir(cfg);
  mvdid::OutDirLock lock(cfg.paths.out_dir);
  const mvdid::SynthCorpusPaths paths = mvdid::generate_synth_corpus(
      cfg.synth, cfg.seed, (fs::path(cfg.paths.out_dir) / "synth").string());
  std::printf("train_manifest: %s\ntest_manifest: %s\n", paths.train_manifest.c_str(),
              paths.test_manifest.c_str());
}

void cmd_run_pipeline(const mvdid::PipelineConfig& cfg, const StageInputs& inputs) {
  check_known_inputs(inputs, {}, "run-pipeline");
  const mvdid::PipelineResult result = mvdid::run_pipeline(cfg);
  std::printf("%s", result.report_text.c_str());
  std::printf("best: %s  final: %s\nresults: %s\n", result.best_system.c_str(),
              result.final_system.c_str(), out_path(cfg, mvdid::kResultsFile).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mvdid: two-view (phonotactic + acoustic) dialect identification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::vector<std::string> stage_inputs_raw;
  bool force = false;
  app.add_option("--config", config_path, "pipeline configuration file (JSON)")
      ->required();
  auto* seed_opt = app.add_option("--seed", seed, "override the configured seed");
  auto* out_opt = app.add_option("--out", out_dir, "override the output directory");
  app.add_option("--stage-input", stage_inputs_raw,
                 "redirect a stage input, name=path (repeatable)");
  app.add_flag("--force", force, "evaluate artifacts even on config-hash mismatch");

  const std::vector<std::pair<const char*, const char*>> subs = {
      {"build-vocab", "build the n-gram vocabulary from the training manifest"},
      {"featurize-phono", "fit (or apply) the latent projector and write X_P"},
      {"train-ubm", "train the diagonal-covariance GMM-UBM on training frames"},
      {"train-tv", "train the total-variability subspace"},
      {"extract-ivectors", "extract i-vectors and write X_A"},
      {"fit-cca", "fit (or apply) the canonical projections and write Z_C"},
      {"fit-lda-wccn", "fit (or apply) LDA+WCCN for Z_C and X_A"},
      {"train-clf", "train one softmax classifier per system"},
      {"evaluate", "score serialized classifiers, or metrics of a confusion file"},
      {"synth-data", "generate the synthetic two-view corpus"},
      {"run-pipeline", "run every stage end to end and write the report"},
  };
  for (const auto& [name, help] : subs) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);   // prints help or the parse error
    return rc == 0 ? 0 : 2;       // flag/subcommand problems are config errors
  }

  try {
    mvdid::PipelineConfig cfg = mvdid::load_config(config_path);
    if (seed_opt->count()) cfg.seed = seed;
    if (out_opt->count()) cfg.paths.out_dir = out_dir;
    const StageInputs inputs = parse_stage_inputs(stage_inputs_raw);

    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "build-vocab") cmd_build_vocab(cfg, inputs);
    else if (sub == "featurize-phono") cmd_featurize_phono(cfg, inputs);
    else if (sub == "train-ubm") cmd_train_ubm(cfg, inputs);
    else if (sub == "train-tv") cmd_train_tv(cfg, inputs);
    else if (sub == "extract-ivectors") cmd_extract_ivectors(cfg, inputs);
    else if (sub == "fit-cca") cmd_fit_cca(cfg, inputs);
    else if (sub == "fit-lda-wccn") cmd_fit_lda_wccn(cfg, inputs);
    else if (sub == "train-clf") cmd_train_clf(cfg, inputs);
    else if (sub == "evaluate") cmd_evaluate(cfg, inputs, force);
    else if (sub == "synth-data") cmd_synth_data(cfg, inputs);
    else cmd_run_pipeline(cfg, inputs);
    return 0;
  } catch (const mvdid::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.kind()) {
      case mvdid::ErrorKind::Config: return 2;
      case mvdid::ErrorKind::Data:
      case mvdid::ErrorKind::Dimension: return 3;
      case mvdid::ErrorKind::Numeric: return 4;
    }
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
