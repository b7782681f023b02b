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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "longiseg/components.hpp"
#include "longiseg/error.hpp"
#include "longiseg/volume.hpp"

#include <json.hpp>

namespace longiseg {

/// A guidance coordinate marking one tumour in one scan.
struct Click {
  Vec3 pos_mm{};
  std::string scan_id;
  std::string tumour_id;
  std::optional<double> validity_prob;
};

/// A binary tumour mask tied to its scan and tumour.
struct TumourMask {
  Volume mask;  // LABEL_UINT in {0,1}, grid-identical to its scan
  std::string tumour_id;
  std::string scan_id;

  std::size_t voxel_count() const {
    std::size_t n = 0;
    for (float v : mask.data()) n += v != 0.0f;
    return n;
  }
};

/// The guided/unguided volumetric segmenter contract. Implementations must
/// be deterministic for identical inputs, return probabilities on the same
/// grid as the scan, and satisfy guided(scan, {}) == unguided(scan).
class SegmenterBackend {
 public:
  virtual ~SegmenterBackend() = default;

  /// Segment every lesion-like object with no user input.
  virtual Volume unguided(const Volume& scan) = 0;

  /// Segment only what the clicks indicate.
  virtual Volume guided(const Volume& scan, std::span<const Click> clicks) = 0;

  virtual std::string name() const = 0;
};

/// Rasterize clicks into a guidance channel: exp(-d^2 / (2 sigma^2)) of the
/// voxel-space distance d to the nearest click voxel, 1.0 at the click voxel
/// itself and 0 beyond 4 sigma. Sigma is in voxel units.
inline Volume encode_guidance(std::span<const Click> clicks, const Volume& grid,
                              double sigma_vox = 2.0) {
  if (!(sigma_vox > 0)) throw invalid_argument_error("encode_guidance: sigma must be > 0");
  Volume out(grid.dims(), grid.spacing(), grid.origin(), ElementKind::PROB_FLOAT);
  const Index3 d = grid.dims();
  const double cutoff = 4.0 * sigma_vox;
  const double cutoff2 = cutoff * cutoff;
  const int reach = static_cast<int>(std::floor(cutoff));

  for (const Click& click : clicks) {
    const Index3 c = index_from_world(grid, click.pos_mm);  // throws if outside
    for (int dz = -reach; dz <= reach; ++dz)
      for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) {
          const int x = c.x + dx, y = c.y + dy, z = c.z + dz;
          if (x < 0 || x >= d.x || y < 0 || y >= d.y || z < 0 || z >= d.z) continue;
          const double d2 = double(dx) * dx + double(dy) * dy + double(dz) * dz;
          if (d2 > cutoff2) continue;
          const float g = static_cast<float>(std::exp(-d2 / (2.0 * sigma_vox * sigma_vox)));
          float& cell = out.at(x, y, z);
          if (g > cell) cell = g;
        }
  }
  return out;
}

/// Threshold a probability volume into a {0,1} mask; strictly greater-than.
inline Volume binarize(const Volume& prob, double threshold) {
  if (prob.kind() != ElementKind::PROB_FLOAT)
    throw invalid_argument_error("binarize: input must be PROB_FLOAT");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw invalid_argument_error("binarize: threshold must lie in (0,1)");
  Volume out(prob.dims(), prob.spacing(), prob.origin(), ElementKind::LABEL_UINT);
  for (std::size_t i = 0; i < prob.size(); ++i)
    out.data()[i] = prob.data()[i] > static_cast<float>(threshold) ? 1.0f : 0.0f;
  return out;
}

/// Pick the components a click set indicates: for each click the component
/// containing its voxel, or failing that the component whose nearest voxel
/// lies within `attach_radius_mm` of the click. Selection is per click and
/// cumulative, so adding clicks never deselects a component.
inline std::vector<const Component*> select_components_for_clicks(
    const std::vector<Component>& comps, std::span<const Click> clicks, const Volume& grid,
    double attach_radius_mm = 10.0) {
  std::vector<bool> selected(comps.size(), false);

  for (const Click& click : clicks) {
    const Index3 cv = index_from_world(grid, click.pos_mm);
    const std::uint32_t lin = static_cast<std::uint32_t>(grid.linear(cv));

    bool contained = false;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      if (std::binary_search(comps[i].voxels.begin(), comps[i].voxels.end(), lin)) {
        selected[i] = true;
        contained = true;
        break;
      }
    }
    if (contained) continue;

    // Nearest component boundary within the attach radius; first component
    // in scan order wins distance ties.
    double best = std::numeric_limits<double>::infinity();
    int best_idx = -1;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      for (std::uint32_t v : comps[i].voxels) {
        const double dist = norm(world_from_index(grid, grid.delinear(v)) - click.pos_mm);
        if (dist <= attach_radius_mm && dist < best) {
          best = dist;
          best_idx = static_cast<int>(i);
        }
      }
    }
    if (best_idx >= 0) selected[best_idx] = true;
  }

  std::vector<const Component*> out;
  for (std::size_t i = 0; i < comps.size(); ++i)
    if (selected[i]) out.push_back(&comps[i]);
  return out;
}

/// Clicks payload of the external-backend protocol.
inline nlohmann::json clicks_to_json(std::span<const Click> clicks, const std::string& mode) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Click& c : clicks)
    arr.push_back({{"pos_mm", {c.pos_mm.x, c.pos_mm.y, c.pos_mm.z}}});
  return {{"clicks", arr}, {"mode", mode}};
}

}  // namespace longiseg
