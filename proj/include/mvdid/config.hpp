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

#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvdid/classifier.hpp"
#include "mvdid/corpus.hpp"
#include "mvdid/error.hpp"
#include "mvdid/phonotactic.hpp"
#include "mvdid/synth.hpp"

namespace mvdid {

// Pipeline configuration: a JSON file with one section per module. Every key
// is optional and falls back to its default; unknown keys are rejected by
// name so typos cannot silently revert a parameter to its default. The
// defaults are the full-corpus operating point; desk-scale runs override the
// model sizes explicitly.
//
// The config hash identifies the modeling configuration across artifacts. It
// covers every section except `paths`, so moving data or output directories
// does not orphan previously trained models.

struct PathsConfig {
  std::string train_manifest;
  std::string test_manifest;
  std::string fixture_confusion;  // evaluate-from-fixture input
  std::string out_dir = "out";
};

struct PhonotacticSection {
  std::vector<std::size_t> orders = {2, 3};
  std::size_t d_cap = 8000;  // vocabulary truncation
  std::size_t k = 1200;      // retained SVD rank
  bool log_counts = false;
  bool center = false;
};

struct AcousticSection {
  std::size_t g = 2048;  // UBM components
  std::size_t r = 400;   // total-variability rank
  std::size_t ubm_iters = 10;
  std::size_t tv_iters = 5;
  double var_floor_scale = 1e-4;
  bool min_divergence = false;  // accepted only as false
  bool length_norm = false;     // unit-normalize i-vectors
};

struct CcaSection {
  std::size_t c = 300;
  double ridge = 1e-6;
};

struct DiscriminantSection {
  std::size_t m = 4;
  double lda_ridge = 1e-6;
  double wccn_ridge = 1e-6;
  std::string order = "lda-wccn";  // or "wccn-lda"
};

struct FusionSection {
  std::string mode = "feature";  // feature | score | concat
  std::string score_space = "probability";  // probability | log
  std::vector<double> score_weights;  // empty = equal
};

struct SynthSection {
  std::size_t classes = 5;
  std::size_t n_train_per_class = 200;
  std::size_t n_test_per_class = 60;
  std::size_t shared_dim = 6;
  double noise_p = 1.0;
  double noise_a = 1.0;
  double class_sep = 1.0;
  double latent_spread = 1.0;
  double view_offset = 1.0;
  std::size_t p_dim = 24;
  std::size_t a_dim = 16;
  std::size_t frames_per_utt = 20;
  double frame_jitter = 0.5;
  double count_base = 12.0;
  double count_gain = 2.0;
};

struct PipelineConfig {
  PathsConfig paths;
  std::vector<std::string> label_set = default_label_set();
  PhonotacticSection phonotactic;
  AcousticSection acoustic;
  CcaSection cca;
  DiscriminantSection discriminant;
  TrainConfig classifier;  // seed filled per stage at run time
  FusionSection fusion;
  SynthSection synth;
  std::uint64_t seed = 1;
};

namespace detail {

// Typed extraction with errors that name the full dotted key.
template <typename T>
T config_value(const nlohmann::json& v, const std::string& key,
               const char* type_name) {
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw_config("config: " + key + ": expected " + type_name);
  }
}

inline std::size_t config_count(const nlohmann::json& v,
                                const std::string& key) {
  if (!v.is_number_unsigned())
    throw_config("config: " + key + ": expected a non-negative integer");
  return config_value<std::size_t>(v, key, "a non-negative integer");
}

inline double config_real(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number())
    throw_config("config: " + key + ": expected a number");
  return config_value<double>(v, key, "a number");
}

inline bool config_bool(const nlohmann::json& v, const std::string& key) {
  if (!v.is_boolean()) throw_config("config: " + key + ": expected a boolean");
  return v.get<bool>();
}

inline std::string config_string(const nlohmann::json& v,
                                 const std::string& key) {
  if (!v.is_string()) throw_config("config: " + key + ": expected a string");
  return v.get<std::string>();
}

inline const nlohmann::json& config_section(const nlohmann::json& doc,
                                            const std::string& name) {
  const nlohmann::json& v = doc.at(name);
  if (!v.is_object())
    throw_config("config: " + name + ": expected an object section");
  return v;
}

[[noreturn]] inline void unknown_key(const std::string& section,
                                     const std::string& key) {
  throw_config("config: unknown key \"" +
               (section.empty() ? key : section + "." + key) + "\"");
}

}  // namespace detail

inline void validate_config(const PipelineConfig& cfg) {
  if (cfg.label_set.empty())
    throw_config("config: corpus.label_set must not be empty");
  std::set<std::string> seen;
  for (const std::string& l : cfg.label_set) {
    if (l.empty()) throw_config("config: corpus.label_set has an empty label");
    if (!seen.insert(l).second)
      throw_config("config: corpus.label_set repeats label \"" + l + "\"");
  }
  if (cfg.phonotactic.orders.empty())
    throw_config("config: phonotactic.orders must not be empty");
  for (const std::size_t o : cfg.phonotactic.orders)
    if (o < 1) throw_config("config: phonotactic.orders entries must be >= 1");
  if (cfg.phonotactic.d_cap < 1)
    throw_config("config: phonotactic.d_cap must be >= 1");
  if (cfg.phonotactic.k < 1) throw_config("config: phonotactic.k must be >= 1");
  if (cfg.acoustic.g < 1) throw_config("config: acoustic.g must be >= 1");
  if (cfg.acoustic.r < 1) throw_config("config: acoustic.r must be >= 1");
  if (cfg.acoustic.tv_iters < 1)
    throw_config("config: acoustic.tv_iters must be >= 1");
  if (cfg.acoustic.var_floor_scale <= 0.0)
    throw_config("config: acoustic.var_floor_scale must be > 0");
  if (cfg.acoustic.min_divergence)
    throw_config(
        "config: acoustic.min_divergence: minimum-divergence re-estimation "
        "is not implemented; must be false");
  if (cfg.cca.c < 1) throw_config("config: cca.c must be >= 1");
  if (cfg.cca.ridge < 0.0) throw_config("config: cca.ridge must be >= 0");
  if (cfg.discriminant.m < 1) throw_config("config: discriminant.m must be >= 1");
  if (cfg.discriminant.lda_ridge < 0.0 || cfg.discriminant.wccn_ridge < 0.0)
    throw_config("config: discriminant ridges must be >= 0");
  if (cfg.discriminant.order != "lda-wccn" && cfg.discriminant.order != "wccn-lda")
    throw_config("config: discriminant.order must be \"lda-wccn\" or \"wccn-lda\"");
  detail::check_train_config(cfg.classifier);
  if (cfg.fusion.mode != "feature" && cfg.fusion.mode != "score" &&
      cfg.fusion.mode != "concat")
    throw_config(
        "config: fusion.mode must be \"feature\", \"score\", or \"concat\"");
  if (cfg.fusion.score_space != "probability" && cfg.fusion.score_space != "log")
    throw_config(
        "config: fusion.score_space must be \"probability\" or \"log\"");
  if (!cfg.fusion.score_weights.empty()) {
    if (cfg.fusion.score_weights.size() != 2)
      throw_config(
          "config: fusion.score_weights must have exactly 2 entries (one per "
          "fused system) or be omitted");
    double wsum = 0.0;
    for (const double w : cfg.fusion.score_weights) {
      if (w < 0.0)
        throw_config("config: fusion.score_weights entries must be >= 0");
      wsum += w;
    }
    if (wsum <= 0.0)
      throw_config("config: fusion.score_weights must not all be zero");
  }
  if (cfg.synth.classes < 2) throw_config("config: synth.classes must be >= 2");
  if (cfg.synth.n_train_per_class < 1 || cfg.synth.n_test_per_class < 1)
    throw_config("config: synth per-class counts must be >= 1");
  if (cfg.synth.shared_dim < 1)
    throw_config("config: synth.shared_dim must be >= 1");
  if (cfg.synth.p_dim < 1 || cfg.synth.a_dim < 1 || cfg.synth.frames_per_utt < 1)
    throw_config("config: synth dimensions must be >= 1");
  if (cfg.synth.noise_p < 0.0 || cfg.synth.noise_a < 0.0 ||
      cfg.synth.frame_jitter < 0.0)
    throw_config("config: synth noise scales must be >= 0");
}

// Parse a config document. Missing sections and keys keep their defaults;
// unknown ones are an error.
inline PipelineConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw_config("config: top level must be an object");
  PipelineConfig cfg;
  for (const auto& [section, body] : doc.items()) {
    if (section == "paths") {
      for (const auto& [key, v] : detail::config_section(doc, section).items()) {
        const std::string full = "paths." + key;
        if (key == "train_manifest")
          cfg.paths.train_manifest = detail::config_string(v, full);
        else if (key == "test_manifest")
          cfg.paths.test_manifest = detail::config_string(v, full);
        else if (key == "fixture_confusion")
          cfg.paths.fixture_confusion = detail::config_string(v, full);
        else if (key == "out_dir")
          cfg.paths.out_dir = detail::config_string(v, full);
        else
          detail::unknown_key(section, key);
      }
    } else if (section == "corpus") {
      for (const auto& [key, v] : detail::config_section(doc, section).items()) {
        if (key == "label_set") {
          if (!v.is_array())
            throw_config("config: corpus.label_set: expected an array");
          cfg.label_set.clear();
          for (const auto& l : v)
            cfg.label_set.push_back(
                detail::config_string(l, "corpus.label_set"));
        } else {
          detail::unknown_key(section, key);
        }
      }
    } else if (section == "phonotactic") {
      for (const auto& [key, v] : detail::config_section(doc, section).items()) {
        const std::string full = "phonotactic." + key;
        if (key == "orders") {
          if (!v.is_array())
            throw_config("config: phonotactic.orders: expected an array");
          cfg.phonotactic.orders.clear();
          for (const auto& o : v)
            cfg.phonotactic.orders.push_back(detail::config_count(o, full));
        } else if (key == "d_cap") {
          cfg.phonotactic.d_cap = detail::config_count(v, full);
        } else if (key == "k") {
          cfg.phonotactic.k = detail::config_count(v, full);
        } else if (key == "log_counts") {
          cfg.phonotactic.log_counts = detail::config_bool(v, full);
        } else if (key == "center") {
          cfg.phonotactic.center = detail::config_bool(v, full);
        } else {
          detail::unknown_key(section, key);
        }
      }
    } else if (section == "acoustic") {
      for (const auto& [key, v] : detail::config_section(doc, section).items()) {
        const std::string full = "acoustic." + key;
        if (key == "g")
          cfg.acoustic.g = detail::config_count(v, full);
        else if (key == "r")
          cfg.acoustic.r = detail::config_count(v, full);
        else if (key == "ubm_iters")
          cfg.acoustic.ubm_iters = detail::config_count(v, full);
        else if (key == "tv_iters")
          cfg.acoustic.tv_iters = detail::config_count(v, full);
        else if (key == "var_floor_scale")
          cfg.acoustic.var_floor_scale = detail::config_real(v, full);
        else if (key == "min_divergence")
          cfg.acoustic.min_divergence = detail::config_bool(v, full);
        else if (key == "length_norm")
          cfg.acoustic.length_norm = detail::config_bool(v, full);
        else
          detail::unknown_key(section, key);
      }
    } else if (section == "cca") {
      for (const auto& [key, v] : detail::config_section(doc, section).items()) {
        const std::string full = "cca." + key;
        if (key == "c")
          cfg.cca.c = detail::config_count(v, full);
        else if (key == "ridge")
          cfg.cca.ridge = detail::config_real(v, full);
        else
          detail::unknown_key(section, key);
      }
    } else if (section == "discriminant") {
      for (const auto& [key, v] : detail::config_section(doc, section).items()) {
        const std::string full = "discriminant." + key;
        if (key == "m")
          cfg.discriminant.m = detail::config_count(v, full);
        else if (key == "lda_ridge")
          cfg.discriminant.lda_ridge = detail::config_real(v, full);
        else if (key == "wccn_ridge")
          cfg.discriminant.wccn_ridge = detail::config_real(v, full);
        else if (key == "order")
          cfg.discriminant.order = detail::config_string(v, full);
        else
          detail::unknown_key(section, key);
      }
    } else if (section == "classifier") {
      for (const auto& [key, v] : detail::config_section(doc, section).items()) {
        const std::string full = "classifier." + key;
        if (key == "l1_ratio")
          cfg.classifier.l1_ratio = detail::config_real(v, full);
        else if (key == "l2_ratio")
          cfg.classifier.l2_ratio = detail::config_real(v, full);
        else if (key == "reg_strength")
          cfg.classifier.reg_strength = detail::config_real(v, full);
        else if (key == "learning_rate")
          cfg.classifier.learning_rate = detail::config_real(v, full);
        else if (key == "epochs")
          cfg.classifier.epochs = detail::config_count(v, full);
        else if (key == "batch")
          cfg.classifier.batch = detail::config_count(v, full);
        else
          detail::unknown_key(section, key);
      }
    } else if (section == "fusion") {
      for (const auto& [key, v] : detail::config_section(doc, section).items()) {
        const std::string full = "fusion." + key;
        if (key == "mode") {
          cfg.fusion.mode = detail::config_string(v, full);
        } else if (key == "score_space") {
          cfg.fusion.score_space = detail::config_string(v, full);
        } else if (key == "score_weights") {
          if (!v.is_array())
            throw_config("config: fusion.score_weights: expected an array");
          cfg.fusion.score_weights.clear();
          for (const auto& w : v)
            cfg.fusion.score_weights.push_back(detail::config_real(w, full));
        } else {
          detail::unknown_key(section, key);
        }
      }
    } else if (section == "synth") {
      for (const auto& [key, v] : detail::config_section(doc, section).items()) {
        const std::string full = "synth." + key;
        if (key == "classes")
          cfg.synth.classes = detail::config_count(v, full);
        else if (key == "n_train_per_class")
          cfg.synth.n_train_per_class = detail::config_count(v, full);
        else if (key == "n_test_per_class")
          cfg.synth.n_test_per_class = detail::config_count(v, full);
        else if (key == "shared_dim")
          cfg.synth.shared_dim = detail::config_count(v, full);
        else if (key == "noise_p")
          cfg.synth.noise_p = detail::config_real(v, full);
        else if (key == "noise_a")
          cfg.synth.noise_a = detail::config_real(v, full);
        else if (key == "class_sep")
          cfg.synth.class_sep = detail::config_real(v, full);
        else if (key == "latent_spread")
          cfg.synth.latent_spread = detail::config_real(v, full);
        else if (key == "view_offset")
          cfg.synth.view_offset = detail::config_real(v, full);
        else if (key == "p_dim")
          cfg.synth.p_dim = detail::config_count(v, full);
        else if (key == "a_dim")
          cfg.synth.a_dim = detail::config_count(v, full);
        else if (key == "frames_per_utt")
          cfg.synth.frames_per_utt = detail::config_count(v, full);
        else if (key == "frame_jitter")
          cfg.synth.frame_jitter = detail::config_real(v, full);
        else if (key == "count_base")
          cfg.synth.count_base = detail::config_real(v, full);
        else if (key == "count_gain")
          cfg.synth.count_gain = detail::config_real(v, full);
        else
          detail::unknown_key(section, key);
      }
    } else if (section == "seed") {
      if (!body.is_number_unsigned())
        throw_config("config: seed: expected a non-negative integer");
      cfg.seed = body.get<std::uint64_t>();
    } else {
      detail::unknown_key("", section);
    }
  }
  validate_config(cfg);
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_config("config: cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw_config("config: " + path + ": " + e.what());
  }
  return config_from_json(doc);
}

// Canonical JSON rendering of the full configuration (keys sorted by
// nlohmann's object ordering). Used for display and, minus `paths`, for the
// config hash.
inline nlohmann::json config_to_json(const PipelineConfig& cfg) {
  nlohmann::json doc;
  doc["paths"]["train_manifest"] = cfg.paths.train_manifest;
  doc["paths"]["test_manifest"] = cfg.paths.test_manifest;
  doc["paths"]["fixture_confusion"] = cfg.paths.fixture_confusion;
  doc["paths"]["out_dir"] = cfg.paths.out_dir;
  doc["corpus"]["label_set"] = cfg.label_set;
  doc["phonotactic"]["orders"] = cfg.phonotactic.orders;
  doc["phonotactic"]["d_cap"] = cfg.phonotactic.d_cap;
  doc["phonotactic"]["k"] = cfg.phonotactic.k;
  doc["phonotactic"]["log_counts"] = cfg.phonotactic.log_counts;
  doc["phonotactic"]["center"] = cfg.phonotactic.center;
  doc["acoustic"]["g"] = cfg.acoustic.g;
  doc["acoustic"]["r"] = cfg.acoustic.r;
  doc["acoustic"]["ubm_iters"] = cfg.acoustic.ubm_iters;
  doc["acoustic"]["tv_iters"] = cfg.acoustic.tv_iters;
  doc["acoustic"]["var_floor_scale"] = cfg.acoustic.var_floor_scale;
  doc["acoustic"]["min_divergence"] = cfg.acoustic.min_divergence;
  doc["acoustic"]["length_norm"] = cfg.acoustic.length_norm;
  doc["cca"]["c"] = cfg.cca.c;
  doc["cca"]["ridge"] = cfg.cca.ridge;
  doc["discriminant"]["m"] = cfg.discriminant.m;
  doc["discriminant"]["lda_ridge"] = cfg.discriminant.lda_ridge;
  doc["discriminant"]["wccn_ridge"] = cfg.discriminant.wccn_ridge;
  doc["discriminant"]["order"] = cfg.discriminant.order;
  doc["classifier"]["l1_ratio"] = cfg.classifier.l1_ratio;
  doc["classifier"]["l2_ratio"] = cfg.classifier.l2_ratio;
  doc["classifier"]["reg_strength"] = cfg.classifier.reg_strength;
  doc["classifier"]["learning_rate"] = cfg.classifier.learning_rate;
  doc["classifier"]["epochs"] = cfg.classifier.epochs;
  doc["classifier"]["batch"] = cfg.classifier.batch;
  doc["fusion"]["mode"] = cfg.fusion.mode;
  doc["fusion"]["score_space"] = cfg.fusion.score_space;
  doc["fusion"]["score_weights"] = cfg.fusion.score_weights;
  doc["synth"]["classes"] = cfg.synth.classes;
  doc["synth"]["n_train_per_class"] = cfg.synth.n_train_per_class;
  doc["synth"]["n_test_per_class"] = cfg.synth.n_test_per_class;
  doc["synth"]["shared_dim"] = cfg.synth.shared_dim;
  doc["synth"]["noise_p"] = cfg.synth.noise_p;
  doc["synth"]["noise_a"] = cfg.synth.noise_a;
  doc["synth"]["class_sep"] = cfg.synth.class_sep;
  doc["synth"]["latent_spread"] = cfg.synth.latent_spread;
  doc["synth"]["view_offset"] = cfg.synth.view_offset;
  doc["synth"]["p_dim"] = cfg.synth.p_dim;
  doc["synth"]["a_dim"] = cfg.synth.a_dim;
  doc["synth"]["frames_per_utt"] = cfg.synth.frames_per_utt;
  doc["synth"]["frame_jitter"] = cfg.synth.frame_jitter;
  doc["synth"]["count_base"] = cfg.synth.count_base;
  doc["synth"]["count_gain"] = cfg.synth.count_gain;
  doc["seed"] = cfg.seed;
  return doc;
}

// FNV-1a over the canonical JSON with the path section removed: the hash
// pins the modeling configuration, not where files happen to live.
inline std::uint64_t config_hash(const PipelineConfig& cfg) {
  nlohmann::json doc = config_to_json(cfg);
  doc.erase("paths");
  return detail::fnv1a64(doc.dump());
}

}  // namespace mvdid
