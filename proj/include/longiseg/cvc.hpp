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
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "longiseg/error.hpp"
#include "longiseg/forest.hpp"
#include "longiseg/segmenter.hpp"
#include "longiseg/volume.hpp"

#include <json.hpp>

namespace longiseg {

/// Inputs to the click-validity classifier: HU and unguided-probability
/// statistics of the source tumour, plus point samples at the propagated
/// click in the destination scan. The statistics let the classifier judge
/// whether the destination attenuation still looks like the tumour it knew.
struct CvcFeatures {
  double src_hu_mean = 0;
  double src_hu_median = 0;
  double src_hu_var = 0;
  double src_hu_std = 0;
  double src_hu_iqr = 0;
  double src_prob_mean = 0;
  double src_prob_var = 0;
  double dst_hu_at_click = 0;
  double dst_prob_at_click = 0;

  static constexpr std::size_t kCount = 9;

  std::array<double, kCount> as_array() const {
    return {src_hu_mean, src_hu_median, src_hu_var,       src_hu_std,       src_hu_iqr,
            src_prob_mean, src_prob_var, dst_hu_at_click, dst_prob_at_click};
  }

  static CvcFeatures from_array(std::span<const double> a) {
    if (a.size() != kCount) throw invalid_argument_error("CvcFeatures: expected 9 values");
    CvcFeatures f;
    f.src_hu_mean = a[0];
    f.src_hu_median = a[1];
    f.src_hu_var = a[2];
    f.src_hu_std = a[3];
    f.src_hu_iqr = a[4];
    f.src_prob_mean = a[5];
    f.src_prob_var = a[6];
    f.dst_hu_at_click = a[7];
    f.dst_prob_at_click = a[8];
    return f;
  }
};

namespace detail {

/// Quantile with linear interpolation between closest ranks at p*(n-1).
/// `sorted` must be ascending and non-empty.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[lo + 1] - sorted[lo]) * frac;
}

struct Stats {
  double mean = 0, median = 0, var = 0, stddev = 0, iqr = 0;
};

/// Order-free statistics over a sample; population variance.
inline Stats describe(std::vector<double> values) {
  Stats s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  for (double v : values) s.var += (v - s.mean) * (v - s.mean);
  s.var /= n;
  s.stddev = std::sqrt(s.var);
  std::sort(values.begin(), values.end());
  s.median = quantile_sorted(values, 0.5);
  s.iqr = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
  return s;
}

}  // namespace detail

/// Extract the 9 CVC features. Source statistics run over exactly the
/// voxels where src_mask is nonzero; destination values are the point
/// samples at the click's voxel.
inline CvcFeatures extract_features(const Volume& src_scan, const Volume& src_mask,
                                    const Volume& src_unguided_prob, const Volume& dst_scan,
                                    const Volume& dst_unguided_prob, const Click& click_dst) {
  if (!src_mask.same_grid(src_scan) || !src_unguided_prob.same_grid(src_scan))
    throw grid_mismatch_error("extract_features: source mask/probability grid mismatch");
  if (!dst_unguided_prob.same_grid(dst_scan))
    throw grid_mismatch_error("extract_features: destination probability grid mismatch");

  std::vector<double> hu, prob;
  for (std::size_t i = 0; i < src_mask.size(); ++i) {
    if (src_mask.data()[i] == 0.0f) continue;
    hu.push_back(src_scan.data()[i]);
    prob.push_back(src_unguided_prob.data()[i]);
  }
  if (hu.empty()) throw empty_mask_error("extract_features: source mask is empty");

  const detail::Stats hu_stats = detail::describe(std::move(hu));
  const detail::Stats prob_stats = detail::describe(std::move(prob));

  const Index3 cv = index_from_world(dst_scan, click_dst.pos_mm);  // throws if outside

  CvcFeatures f;
  f.src_hu_mean = hu_stats.mean;
  f.src_hu_median = hu_stats.median;
  f.src_hu_var = hu_stats.var;
  f.src_hu_std = hu_stats.stddev;
  f.src_hu_iqr = hu_stats.iqr;
  f.src_prob_mean = prob_stats.mean;
  f.src_prob_var = prob_stats.var;
  f.dst_hu_at_click = dst_scan.at(cv);
  f.dst_prob_at_click = dst_unguided_prob.at(cv);
  return f;
}

// ---------------------------------------------------------------------------
// Training-set interchange: JSON lines of {"features": [9 reals], "label": 0|1}
// ---------------------------------------------------------------------------

struct LabeledFeatures {
  CvcFeatures features;
  int label = 0;
};

inline void write_training_jsonl(const std::vector<LabeledFeatures>& rows,
                                 const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw format_error("cannot open training file for write: " + path.string());
  for (const auto& r : rows) {
    const auto a = r.features.as_array();
    nlohmann::json j{{"features", std::vector<double>(a.begin(), a.end())}, {"label", r.label}};
    f << j.dump() << "\n";
  }
}

inline std::vector<LabeledFeatures> read_training_jsonl(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw format_error("cannot open training file: " + path.string());
  std::vector<LabeledFeatures> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw format_error(path.string() + ":" + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
    if (!j.contains("features") || !j.contains("label"))
      throw format_error(path.string() + ":" + std::to_string(lineno) +
                         ": missing \"features\" or \"label\"");
    const auto feats = j.at("features").get<std::vector<double>>();
    out.push_back({CvcFeatures::from_array(feats), j.at("label").get<int>()});
  }
  return out;
}

inline Dataset to_dataset(const std::vector<LabeledFeatures>& rows) {
  Dataset d;
  for (const auto& r : rows) {
    const auto a = r.features.as_array();
    d.add(std::vector<double>(a.begin(), a.end()), r.label);
  }
  return d;
}

}  // namespace longiseg
