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

#include "longiseg/error.hpp"
#include "longiseg/volume.hpp"

namespace longiseg {

enum class Interp { TRILINEAR, NEAREST };

namespace detail {

// A sample position is inside the physical extent if its continuous index
// lies in [-0.5, d-0.5] per axis (voxels are cells around their centers).
// Inside the extent, positions clamp to the edge sample; outside, the
// element kind's padding value applies.
inline bool in_extent(double cx, double cy, double cz, Index3 d) {
  return cx >= -0.5 && cx <= d.x - 0.5 && cy >= -0.5 && cy <= d.y - 0.5 && cz >= -0.5 &&
         cz <= d.z - 0.5;
}

inline float sample_nearest(const Volume& v, double cx, double cy, double cz) {
  if (!in_extent(cx, cy, cz, v.dims())) return padding_value(v.kind());
  auto near = [](double c, int d) {
    int i = static_cast<int>(std::llround(c));
    return i < 0 ? 0 : (i >= d ? d - 1 : i);
  };
  return v.at(near(cx, v.dims().x), near(cy, v.dims().y), near(cz, v.dims().z));
}

inline float sample_trilinear(const Volume& v, double cx, double cy, double cz) {
  const Index3 d = v.dims();
  if (!in_extent(cx, cy, cz, d)) return padding_value(v.kind());
  auto clamp01 = [](double c, int n) { return c < 0 ? 0.0 : (c > n - 1 ? double(n - 1) : c); };
  cx = clamp01(cx, d.x);
  cy = clamp01(cy, d.y);
  cz = clamp01(cz, d.z);
  const int x0 = static_cast<int>(std::floor(cx));
  const int y0 = static_cast<int>(std::floor(cy));
  const int z0 = static_cast<int>(std::floor(cz));
  const int x1 = x0 + 1 < d.x ? x0 + 1 : x0;
  const int y1 = y0 + 1 < d.y ? y0 + 1 : y0;
  const int z1 = z0 + 1 < d.z ? z0 + 1 : z0;
  const double fx = cx - x0, fy = cy - y0, fz = cz - z0;

  const double c000 = v.at(x0, y0, z0), c100 = v.at(x1, y0, z0);
  const double c010 = v.at(x0, y1, z0), c110 = v.at(x1, y1, z0);
  const double c001 = v.at(x0, y0, z1), c101 = v.at(x1, y0, z1);
  const double c011 = v.at(x0, y1, z1), c111 = v.at(x1, y1, z1);

  const double c00 = c000 + (c100 - c000) * fx;
  const double c10 = c010 + (c110 - c010) * fx;
  const double c01 = c001 + (c101 - c001) * fx;
  const double c11 = c011 + (c111 - c011) * fx;
  const double c0 = c00 + (c10 - c00) * fy;
  const double c1 = c01 + (c11 - c01) * fy;
  return static_cast<float>(c0 + (c1 - c0) * fz);
}

}  // namespace detail

/// Resample onto a grid with the given spacing, keeping the origin. Output
/// dims are ceil(dims*spacing/target) per axis, so the output grid covers
/// exactly the input's physical extent (to within one output voxel) and no
/// sample is ever out of field: positions in the half-voxel border that ceil
/// can produce replicate the edge sample. LABEL_UINT volumes must use
/// NEAREST and HU_INT/PROB_FLOAT must use TRILINEAR.
inline Volume resample_to_standard(const Volume& vol, Vec3 target_spacing, Interp mode) {
  if (!(target_spacing.x > 0 && target_spacing.y > 0 && target_spacing.z > 0))
    throw invalid_argument_error("resample: target_spacing components must be > 0");
  if (vol.kind() == ElementKind::LABEL_UINT && mode != Interp::NEAREST)
    throw invalid_argument_error("resample: LABEL_UINT requires NEAREST");
  if (vol.kind() != ElementKind::LABEL_UINT && mode != Interp::TRILINEAR)
    throw invalid_argument_error("resample: HU_INT/PROB_FLOAT require TRILINEAR");

  const Index3 d = vol.dims();
  const Vec3 s = vol.spacing(), t = target_spacing;
  const Index3 nd{static_cast<int>(std::ceil(d.x * s.x / t.x)),
                  static_cast<int>(std::ceil(d.y * s.y / t.y)),
                  static_cast<int>(std::ceil(d.z * s.z / t.z))};
  Volume out(nd, t, vol.origin(), vol.kind());

  auto clamped = [](double c, int n) { return c < 0.0 ? 0.0 : (c > n - 1 ? double(n - 1) : c); };
  const double rx = t.x / s.x, ry = t.y / s.y, rz = t.z / s.z;
  std::size_t i = 0;
  for (int z = 0; z < nd.z; ++z) {
    const double cz = clamped(z * rz, d.z);
    for (int y = 0; y < nd.y; ++y) {
      const double cy = clamped(y * ry, d.y);
      for (int x = 0; x < nd.x; ++x, ++i) {
        const double cx = clamped(x * rx, d.x);
        out.data()[i] = mode == Interp::NEAREST ? detail::sample_nearest(vol, cx, cy, cz)
                                                : detail::sample_trilinear(vol, cx, cy, cz);
      }
    }
  }
  return out;
}

/// Resample with the interpolant its element kind requires.
inline Volume resample_auto(const Volume& vol, Vec3 target_spacing) {
  return resample_to_standard(
      vol, target_spacing,
      vol.kind() == ElementKind::LABEL_UINT ? Interp::NEAREST : Interp::TRILINEAR);
}

}  // namespace longiseg
