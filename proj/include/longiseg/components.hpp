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
#include <cstdint>
#include <vector>

#include "longiseg/volume.hpp"

namespace longiseg {

/// One 26-connected foreground component of a binary mask.
struct Component {
  std::vector<std::uint32_t> voxels;  // linear indices, ascending
  Index3 bbox_min{};
  Index3 bbox_max{};

  std::size_t voxel_count() const { return voxels.size(); }

  /// Axis-aligned bounding-box extents in millimetres.
  Vec3 extent_mm(Vec3 spacing) const {
    return {(bbox_max.x - bbox_min.x + 1) * spacing.x,
            (bbox_max.y - bbox_min.y + 1) * spacing.y,
            (bbox_max.z - bbox_min.z + 1) * spacing.z};
  }

  double max_extent_mm(Vec3 spacing) const {
    const Vec3 e = extent_mm(spacing);
    return std::max({e.x, e.y, e.z});
  }
};

/// Label the 26-connected components of the nonzero voxels. Components are
/// ordered by their smallest linear index (scan order); voxel lists are
/// sorted ascending, so results are fully deterministic.
inline std::vector<Component> connected_components(const Volume& mask) {
  const Index3 d = mask.dims();
  const std::size_t n = mask.size();
  std::vector<std::uint8_t> visited(n, 0);
  std::vector<Component> out;
  std::vector<std::uint32_t> stack;

  for (std::size_t seed = 0; seed < n; ++seed) {
    if (visited[seed] || mask.data()[seed] == 0.0f) continue;
    Component comp;
    comp.bbox_min = comp.bbox_max = mask.delinear(seed);
    stack.clear();
    stack.push_back(static_cast<std::uint32_t>(seed));
    visited[seed] = 1;

    while (!stack.empty()) {
      const std::uint32_t cur = stack.back();
      stack.pop_back();
      comp.voxels.push_back(cur);
      const Index3 c = mask.delinear(cur);
      comp.bbox_min = {std::min(comp.bbox_min.x, c.x), std::min(comp.bbox_min.y, c.y),
                       std::min(comp.bbox_min.z, c.z)};
      comp.bbox_max = {std::max(comp.bbox_max.x, c.x), std::max(comp.bbox_max.y, c.y),
                       std::max(comp.bbox_max.z, c.z)};

      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0 && dz == 0) continue;
            const int x = c.x + dx, y = c.y + dy, z = c.z + dz;
            if (x < 0 || x >= d.x || y < 0 || y >= d.y || z < 0 || z >= d.z) continue;
            const std::size_t idx = mask.linear(x, y, z);
            if (visited[idx] || mask.data()[idx] == 0.0f) continue;
            visited[idx] = 1;
            stack.push_back(static_cast<std::uint32_t>(idx));
          }
    }
    std::sort(comp.voxels.begin(), comp.voxels.end());
    out.push_back(std::move(comp));
  }
  return out;
}

/// Build a {0,1} LABEL_UINT mask from selected components on a given grid.
inline Volume components_to_mask(const Volume& grid, const std::vector<const Component*>& selected) {
  Volume out(grid.dims(), grid.spacing(), grid.origin(), ElementKind::LABEL_UINT);
  for (const Component* c : selected)
    for (std::uint32_t v : c->voxels) out.data()[v] = 1.0f;
  return out;
}

}  // namespace longiseg
