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

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "longiseg/components.hpp"
#include "longiseg/error.hpp"
#include "longiseg/volume.hpp"

#include <json.hpp>

namespace longiseg {

/// Dice overlap 2|A∩B| / (|A|+|B|) over nonzero voxels of grid-identical
/// masks. Both empty scores 1.0 (a correctly reported absent tumour);
/// exactly one empty scores 0.0.
inline double dice(const Volume& a, const Volume& b) {
  if (!a.same_grid(b)) throw grid_mismatch_error("dice: masks live on different grids");
  std::size_t na = 0, nb = 0, ni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool va = a.data()[i] != 0.0f;
    const bool vb = b.data()[i] != 0.0f;
    na += va;
    nb += vb;
    ni += va && vb;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(ni) / static_cast<double>(na + nb);
}

/// The false-positive rule: 26-connected components of `pred` whose largest
/// axis-aligned bounding-box extent exceeds `min_diameter_mm` and which do
/// not overlap the ground truth at all. ("Diameter" is operationalized as
/// the max bbox extent; a Feret diameter would be a stricter alternative.)
inline int count_false_positives(const Volume& pred, const Volume& gt,
                                 double min_diameter_mm = 10.0) {
  if (!pred.same_grid(gt)) throw grid_mismatch_error("count_false_positives: grid mismatch");
  int count = 0;
  for (const Component& c : connected_components(pred)) {
    if (c.max_extent_mm(pred.spacing()) <= min_diameter_mm) continue;
    bool overlaps = false;
    for (std::uint32_t v : c.voxels)
      if (gt.data()[v] != 0.0f) {
        overlaps = true;
        break;
      }
    if (!overlaps) ++count;
  }
  return count;
}

struct PairedT {
  double t = 0.0;
  int df = 0;
};

/// Paired t statistic over differences d = x - y: t = mean(d)/(sd(d)/sqrt(n))
/// with the n-1 sample standard deviation; df = n-1. The p-value lookup is
/// out of scope, callers report (t, df).
inline PairedT paired_t_statistic(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw invalid_argument_error("paired_t_statistic: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw invalid_argument_error("paired_t_statistic: need at least 2 pairs");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x[i] - y[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (x[i] - y[i]) - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0)
    throw invalid_argument_error("paired_t_statistic: differences have zero variance");
  return {mean / (sd / std::sqrt(static_cast<double>(n))), static_cast<int>(n - 1)};
}

/// One scored segmentation for the evaluation tables.
struct EvalRow {
  std::string scan_id;
  std::string tumour_id;
  double dice = 0.0;
  int fp_count = 0;
  std::string method;
};

/// Per-method mean, standard error and count, plus the row list.
inline nlohmann::json eval_report_json(const std::vector<EvalRow>& rows) {
  nlohmann::json jrows = nlohmann::json::array();
  std::map<std::string, std::vector<double>> dices;
  std::map<std::string, long> fp_totals;
  for (const EvalRow& r : rows) {
    jrows.push_back({{"scan_id", r.scan_id},
                     {"tumour_id", r.tumour_id},
                     {"dice", r.dice},
                     {"fp_count", r.fp_count},
                     {"method", r.method}});
    dices[r.method].push_back(r.dice);
    fp_totals[r.method] += r.fp_count;
  }
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& [method, d] : dices) {
    double mean = 0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    double ss = 0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double se =
        d.size() > 1 ? std::sqrt(ss / static_cast<double>(d.size() - 1)) /
                           std::sqrt(static_cast<double>(d.size()))
                     : 0.0;
    summary[method] = {{"mean_dice", mean},
                       {"std_error", se},
                       {"n", d.size()},
                       {"fp_total", fp_totals[method]}};
  }
  return {{"rows", jrows}, {"summary", summary}};
}

inline std::string eval_report_csv(const std::vector<EvalRow>& rows) {
  std::string out = "scan_id,tumour_id,method,dice,fp_count\n";
  for (const EvalRow& r : rows) {
    out += r.scan_id + "," + r.tumour_id + "," + r.method + "," + std::to_string(r.dice) + "," +
           std::to_string(r.fp_count) + "\n";
  }
  return out;
}

}  // namespace longiseg
