// Copyright 2026 the longiseg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "longiseg/error.hpp"

#include <json.hpp>

namespace longiseg {

/// One scan of a longitudinal study: the CT image, its bone segmentation,
/// and (when annotated) ground-truth tumour masks keyed by tumour id.
struct ScanEntry {
  std::string scan_id;
  int time_index = 0;
  std::filesystem::path image_path;
  std::filesystem::path bone_labels_path;
  std::map<std::string, std::filesystem::path> ground_truth_masks;
};

/// A patient's scan set; drives the pipeline and evaluation.
struct StudyManifest {
  std::string patient_id;
  std::vector<ScanEntry> scans;

  const ScanEntry& scan(const std::string& scan_id) const {
    for (const auto& s : scans)
      if (s.scan_id == scan_id) return s;
    throw invalid_argument_error("manifest: no scan with id \"" + scan_id + "\"");
  }

  bool has_scan(const std::string& scan_id) const {
    return std::any_of(scans.begin(), scans.end(),
                       [&](const ScanEntry& s) { return s.scan_id == scan_id; });
  }

  void validate() const {
    std::set<std::string> ids;
    std::set<int> times;
    for (const auto& s : scans) {
      if (!ids.insert(s.scan_id).second)
        throw format_error("manifest: duplicate scan_id \"" + s.scan_id + "\"");
      if (!times.insert(s.time_index).second)
        throw format_error("manifest: duplicate time_index " + std::to_string(s.time_index));
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json jscans = nlohmann::json::array();
    for (const auto& s : scans) {
      nlohmann::json gt = nlohmann::json::object();
      for (const auto& [tid, p] : s.ground_truth_masks) gt[tid] = p.string();
      nlohmann::json e{{"scan_id", s.scan_id},
                       {"time_index", s.time_index},
                       {"image_path", s.image_path.string()},
                       {"bone_labels_path", s.bone_labels_path.string()}};
      if (!gt.empty()) e["ground_truth_masks"] = gt;
      jscans.push_back(e);
    }
    return {{"patient_id", patient_id}, {"scans", jscans}};
  }

  /// Parse a manifest; relative paths resolve against `base_dir`.
  static StudyManifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    if (!j.contains("patient_id") || !j.contains("scans"))
      throw format_error("manifest: missing \"patient_id\" or \"scans\"");
    StudyManifest m;
    m.patient_id = j.at("patient_id").get<std::string>();
    auto resolve = [&](const std::string& p) -> std::filesystem::path {
      std::filesystem::path path(p);
      return path.is_absolute() ? path : base_dir / path;
    };
    for (const auto& e : j.at("scans")) {
      for (const char* k : {"scan_id", "time_index", "image_path", "bone_labels_path"})
        if (!e.contains(k))
          throw format_error(std::string("manifest: scan entry missing \"") + k + "\"");
      ScanEntry s;
      s.scan_id = e.at("scan_id").get<std::string>();
      s.time_index = e.at("time_index").get<int>();
      s.image_path = resolve(e.at("image_path").get<std::string>());
      s.bone_labels_path = resolve(e.at("bone_labels_path").get<std::string>());
      if (e.contains("ground_truth_masks"))
        for (const auto& [tid, p] : e.at("ground_truth_masks").items())
          s.ground_truth_masks[tid] = resolve(p.get<std::string>());
      m.scans.push_back(std::move(s));
    }
    std::sort(m.scans.begin(), m.scans.end(),
              [](const ScanEntry& a, const ScanEntry& b) { return a.time_index < b.time_index; });
    m.validate();
    return m;
  }
};

inline StudyManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw format_error("cannot open manifest: " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw format_error(path.string() + ": invalid JSON: " + e.what());
  }
  return StudyManifest::from_json(j, std::filesystem::absolute(path).parent_path());
}

inline void save_manifest(const StudyManifest& m, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw format_error("cannot open manifest for write: " + path.string());
  f << m.to_json().dump(2) << "\n";
}

}  // namespace longiseg
