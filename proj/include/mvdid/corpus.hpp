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
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvdid/detail/binio.hpp"
#include "mvdid/error.hpp"
#include "mvdid/matrix.hpp"
#include "mvdid/rng.hpp"

namespace mvdid {

// The default five-dialect label set.
inline const std::vector<std::string>& default_label_set() {
  static const std::vector<std::string> labels = {"EGY", "GLF", "LAV", "MSA", "NOR"};
  return labels;
}

inline int label_index(const std::vector<std::string>& label_set, const std::string& name) {
  for (std::size_t i = 0; i < label_set.size(); ++i)
    if (label_set[i] == name) return static_cast<int>(i);
  return -1;
}

// One utterance: unique id, optional dialect label, and at least one of a
// phone sequence or a reference to a frame-feature file (path relative to
// the manifest's directory unless absolute).
struct UtteranceRecord {
  std::string id;
  std::optional<std::string> label;
  std::vector<std::string> phones;
  std::optional<std::string> frames_ref;
};

struct Dataset {
  std::vector<UtteranceRecord> records;
  std::vector<std::string> label_set;

  std::size_t size() const { return records.size(); }

  // Label indices for fully labeled datasets; throws on an unlabeled record.
  std::vector<int> label_indices() const {
    std::vector<int> out(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!records[i].label)
        throw_data("record '" + records[i].id + "' has no label");
      const int idx = label_index(label_set, *records[i].label);
      if (idx < 0)
        throw_data("record '" + records[i].id + "' label '" + *records[i].label +
                   "' not in label set");
      out[i] = idx;
    }
    return out;
  }
};

inline void validate_dataset(const Dataset& d) {
  if (d.label_set.size() < 2) throw_data("label set must have at least 2 labels");
  std::set<std::string> seen;
  for (const auto& r : d.records) {
    if (!seen.insert(r.id).second) throw_data("duplicate utterance id '" + r.id + "'");
    if (r.label && label_index(d.label_set, *r.label) < 0)
      throw_data("unknown label '" + *r.label + "' on record '" + r.id + "'");
    if (r.phones.empty() && !r.frames_ref)
      throw_data("record '" + r.id + "' has neither phones nor a frames reference");
  }
}

// ---------------------------------------------------------------------------
// Manifest: one JSON object per line, UTF-8.
//   {"id": str, "label": str|null, "phones": [str]|null, "frames": str|null}

inline Dataset load_manifest(const std::string& path,
                             std::vector<std::string> label_set = default_label_set()) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open manifest: " + path);

  Dataset d;
  d.label_set = std::move(label_set);
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw_data(path + ":" + std::to_string(line_no) + ": parse error: " + e.what());
    }
    if (!j.is_object())
      throw_data(path + ":" + std::to_string(line_no) + ": expected a JSON object");
    for (const auto& [key, _] : j.items())
      if (key != "id" && key != "label" && key != "phones" && key != "frames")
        throw_data(path + ":" + std::to_string(line_no) + ": unknown field '" + key + "'");

    UtteranceRecord r;
    if (!j.contains("id") || !j["id"].is_string())
      throw_data(path + ":" + std::to_string(line_no) + ": missing string field 'id'");
    r.id = j["id"].get<std::string>();
    if (!seen.insert(r.id).second)
      throw_data(path + ":" + std::to_string(line_no) + ": duplicate id '" + r.id + "'");

    if (j.contains("label") && !j["label"].is_null()) {
      if (!j["label"].is_string())
        throw_data(path + ":" + std::to_string(line_no) + ": 'label' must be a string");
      r.label = j["label"].get<std::string>();
      if (label_index(d.label_set, *r.label) < 0)
        throw_data(path + ":" + std::to_string(line_no) + ": unknown label '" + *r.label + "'");
    }
    if (j.contains("phones") && !j["phones"].is_null()) {
      if (!j["phones"].is_array())
        throw_data(path + ":" + std::to_string(line_no) + ": 'phones' must be an array");
      for (const auto& p : j["phones"]) {
        if (!p.is_string())
          throw_data(path + ":" + std::to_string(line_no) + ": phone entries must be strings");
        r.phones.push_back(p.get<std::string>());
      }
    }
    if (j.contains("frames") && !j["frames"].is_null()) {
      if (!j["frames"].is_string())
        throw_data(path + ":" + std::to_string(line_no) + ": 'frames' must be a string path");
      r.frames_ref = j["frames"].get<std::string>();
    }
    if (r.phones.empty() && !r.frames_ref)
      throw_data(path + ":" + std::to_string(line_no) +
                 ": record needs phones and/or a frames reference");
    d.records.push_back(std::move(r));
  }
  if (d.records.empty()) warn("manifest '" + path + "' contains no records");
  return d;
}

inline void save_manifest(const Dataset& d, const std::string& path) {
  validate_dataset(d);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_data("cannot open manifest for writing: " + path);
  for (const auto& r : d.records) {
    nlohmann::json j;
    j["id"] = r.id;
    j["label"] = r.label ? nlohmann::json(*r.label) : nlohmann::json(nullptr);
    if (r.phones.empty())
      j["phones"] = nullptr;
    else
      j["phones"] = r.phones;
    j["frames"] = r.frames_ref ? nlohmann::json(*r.frames_ref) : nlohmann::json(nullptr);
    out << j.dump() << "\n";
  }
  if (!out) throw_data("write failure: " + path);
}

// ---------------------------------------------------------------------------
// Frame-matrix file (also the generic stage-exchange matrix format):
//   "MVF1" | version u32=1 | rows u32 | cols u32 | rows*cols f32, row-major, LE.

inline std::string encode_matrix_mvf1(const Matrix& m) {
  std::string out;
  out.reserve(16 + m.storage().size() * 4);
  out += "MVF1";
  detail::put_u32(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.storage()) {
    const float f = static_cast<float>(v);
    if (!std::isfinite(f)) throw_data("matrix value not representable as 32-bit float");
    detail::put_f32(out, f);
  }
  return out;
}

inline Matrix decode_matrix_mvf1(const std::string& bytes, const std::string& what) {
  detail::ByteReader r(bytes, what);
  if (r.raw(4) != "MVF1") throw_data(what + ": bad magic (expected MVF1)");
  const std::uint32_t version = r.u32();
  if (version != 1) throw_data(what + ": unsupported version " + std::to_string(version));
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  if (rows == 0 || cols == 0) throw_data(what + ": degenerate shape " +
                                         std::to_string(rows) + "x" + std::to_string(cols));
  if (r.remaining() != static_cast<std::size_t>(rows) * cols * 4)
    throw_data(what + ": payload size does not match " + std::to_string(rows) + "x" +
               std::to_string(cols));
  Matrix m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) {
      const float f = r.f32();
      if (!std::isfinite(f)) throw_data(what + ": non-finite value at (" +
                                        std::to_string(i) + "," + std::to_string(j) + ")");
      m(i, j) = static_cast<double>(f);
    }
  return m;
}

inline void write_matrix_mvf1(const Matrix& m, const std::string& path) {
  detail::write_file_bytes(path, encode_matrix_mvf1(m));
}

inline Matrix read_matrix_mvf1(const std::string& path) {
  return decode_matrix_mvf1(detail::read_file_bytes(path), path);
}

// Frame-feature wrappers; frames are T x F with T >= 1.
inline Matrix load_frames(const std::string& path) { return read_matrix_mvf1(path); }
inline void save_frames(const Matrix& frames, const std::string& path) {
  if (frames.rows() < 1 || frames.cols() < 1)
    throw_data("save_frames: degenerate frame matrix");
  write_matrix_mvf1(frames, path);
}

// A frames reference is taken relative to the manifest's directory unless
// it is already absolute.
inline std::string resolve_frames_ref(const std::string& manifest_path, const std::string& ref) {
  std::filesystem::path p(ref);
  if (p.is_absolute()) return ref;
  return (std::filesystem::path(manifest_path).parent_path() / p).string();
}

// ---------------------------------------------------------------------------
// Deterministic stratified split. Partition respects per-class proportions
// within one record; membership depends only on (ids, labels, seed), not on
// record order.

inline std::pair<Dataset, Dataset> stratified_split(const Dataset& d, double test_fraction,
                                                    std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw_data("stratified_split: test_fraction must be in (0, 1)");
  validate_dataset(d);
  const std::vector<int> labels = d.label_indices();  // throws on unlabeled

  // Canonical id-sorted view, grouped per class.
  std::vector<std::size_t> order(d.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return d.records[a].id < d.records[b].id;
  });

  Rng rng(seed);
  std::vector<bool> in_test(d.records.size(), false);
  for (std::size_t c = 0; c < d.label_set.size(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t k : order)
      if (labels[k] == static_cast<int>(c)) members.push_back(k);
    if (members.empty()) continue;
    rng.shuffle(members);
    const auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    for (std::size_t i = 0; i < n_test && i < members.size(); ++i) in_test[members[i]] = true;
  }

  Dataset train, test;
  train.label_set = test.label_set = d.label_set;
  for (std::size_t i = 0; i < d.records.size(); ++i)
    (in_test[i] ? test : train).records.push_back(d.records[i]);
  return {std::move(train), std::move(test)};
}

}  // namespace mvdid
