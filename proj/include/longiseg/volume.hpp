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
#include <cstdint>
#include <string>
#include <vector>

#include "longiseg/error.hpp"
#include "longiseg/geometry.hpp"

namespace longiseg {

/// What the scalars of a volume mean. Governs the on-disk datatype, the
/// resampling interpolant and the out-of-field padding value.
enum class ElementKind : std::uint8_t {
  HU_INT,      // CT attenuation, int16 on disk
  PROB_FLOAT,  // probabilities in [0,1], float32 on disk
  LABEL_UINT,  // non-negative integer labels, uint8 on disk
};

inline const char* to_string(ElementKind k) {
  switch (k) {
    case ElementKind::HU_INT: return "HU_INT";
    case ElementKind::PROB_FLOAT: return "PROB_FLOAT";
    case ElementKind::LABEL_UINT: return "LABEL_UINT";
  }
  return "?";
}

inline ElementKind element_kind_from_string(const std::string& s) {
  if (s == "HU_INT") return ElementKind::HU_INT;
  if (s == "PROB_FLOAT") return ElementKind::PROB_FLOAT;
  if (s == "LABEL_UINT") return ElementKind::LABEL_UINT;
  throw format_error("element_kind: unknown value \"" + s + "\"");
}

/// Value used for samples outside a volume's physical extent.
inline float padding_value(ElementKind k) {
  return k == ElementKind::HU_INT ? -1024.0f : 0.0f;
}

/// A dense 3D scalar grid with axis-aligned geometry. Voxel (i,j,k) has its
/// center at origin + (i,j,k)*spacing; data is stored x-fastest. Treat
/// volumes as immutable once filled: every library operation takes them by
/// const reference and returns new ones, so concurrent reads are safe.
class Volume {
 public:
  Volume() = default;

  Volume(Index3 dims, Vec3 spacing, Vec3 origin, ElementKind kind)
      : dims_(dims), spacing_(spacing), origin_(origin), kind_(kind) {
    check_geometry();
    data_.assign(size(), 0.0f);
  }

  Volume(Index3 dims, Vec3 spacing, Vec3 origin, ElementKind kind, std::vector<float> data)
      : dims_(dims), spacing_(spacing), origin_(origin), kind_(kind), data_(std::move(data)) {
    check_geometry();
    if (data_.size() != size())
      throw invalid_argument_error("volume: data length " + std::to_string(data_.size()) +
                                   " does not match dims product " + std::to_string(size()));
  }

  Index3 dims() const { return dims_; }
  Vec3 spacing() const { return spacing_; }
  Vec3 origin() const { return origin_; }
  ElementKind kind() const { return kind_; }

  std::size_t size() const {
    return static_cast<std::size_t>(dims_.x) * dims_.y * dims_.z;
  }
  bool empty() const { return data_.empty(); }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  std::size_t linear(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.x) * (static_cast<std::size_t>(y) +
                                                static_cast<std::size_t>(dims_.y) * z);
  }
  std::size_t linear(Index3 c) const { return linear(c.x, c.y, c.z); }

  Index3 delinear(std::size_t i) const {
    const int x = static_cast<int>(i % dims_.x);
    const int y = static_cast<int>((i / dims_.x) % dims_.y);
    const int z = static_cast<int>(i / (static_cast<std::size_t>(dims_.x) * dims_.y));
    return {x, y, z};
  }

  float at(int x, int y, int z) const { return data_[linear(x, y, z)]; }
  float& at(int x, int y, int z) { return data_[linear(x, y, z)]; }
  float at(Index3 c) const { return data_[linear(c)]; }
  float& at(Index3 c) { return data_[linear(c)]; }

  bool contains(Index3 c) const {
    return c.x >= 0 && c.x < dims_.x && c.y >= 0 && c.y < dims_.y && c.z >= 0 && c.z < dims_.z;
  }

  /// Whether another volume lives on the identical grid.
  bool same_grid(const Volume& o, double tol = 1e-6) const {
    auto near = [tol](Vec3 a, Vec3 b) {
      return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol && std::abs(a.z - b.z) <= tol;
    };
    return dims_ == o.dims_ && near(spacing_, o.spacing_) && near(origin_, o.origin_);
  }

  /// Validate the content invariants for this element kind. Loaders call it;
  /// in-memory producers are trusted.
  void validate_values() const {
    if (kind_ == ElementKind::PROB_FLOAT) {
      for (float v : data_)
        if (!(v >= 0.0f && v <= 1.0f))
          throw format_error("PROB_FLOAT value " + std::to_string(v) + " outside [0,1]");
    } else if (kind_ == ElementKind::LABEL_UINT) {
      for (float v : data_)
        if (v < 0.0f || v != std::floor(v))
          throw format_error("LABEL_UINT value " + std::to_string(v) + " is not a non-negative integer");
    }
  }

 private:
  void check_geometry() const {
    if (dims_.x <= 0 || dims_.y <= 0 || dims_.z <= 0)
      throw invalid_argument_error("volume: dims must be positive");
    if (!(spacing_.x > 0 && spacing_.y > 0 && spacing_.z > 0))
      throw invalid_argument_error("volume: spacing components must be > 0");
  }

  Index3 dims_{};
  Vec3 spacing_{1, 1, 1};
  Vec3 origin_{};
  ElementKind kind_ = ElementKind::HU_INT;
  std::vector<float> data_;
};

/// World position (mm) of a voxel center. Pure axis-aligned mapping.
inline Vec3 world_from_index(const Volume& vol, Index3 c) {
  const Vec3 s = vol.spacing(), o = vol.origin();
  return {o.x + c.x * s.x, o.y + c.y * s.y, o.z + c.z * s.z};
}

/// Nearest voxel index for a world position; rounds half away from zero.
/// Throws out_of_bounds_error if the rounded index leaves the grid.
inline Index3 index_from_world(const Volume& vol, Vec3 p) {
  const Vec3 s = vol.spacing(), o = vol.origin();
  const Index3 c{static_cast<int>(std::llround((p.x - o.x) / s.x)),
                 static_cast<int>(std::llround((p.y - o.y) / s.y)),
                 static_cast<int>(std::llround((p.z - o.z) / s.z))};
  if (!vol.contains(c))
    throw out_of_bounds_error("index_from_world: point (" + std::to_string(p.x) + ", " +
                              std::to_string(p.y) + ", " + std::to_string(p.z) +
                              ") maps outside the grid");
  return c;
}

/// Like index_from_world but reports validity instead of throwing.
inline bool try_index_from_world(const Volume& vol, Vec3 p, Index3& out) {
  const Vec3 s = vol.spacing(), o = vol.origin();
  out = {static_cast<int>(std::llround((p.x - o.x) / s.x)),
         static_cast<int>(std::llround((p.y - o.y) / s.y)),
         static_cast<int>(std::llround((p.z - o.z) / s.z))};
  return vol.contains(out);
}

/// FNV-1a over the payload bytes and grid metadata; cache key for derived
/// per-volume artifacts.
inline std::uint64_t content_hash(const Volume& v) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const Index3 d = v.dims();
  const Vec3 s = v.spacing(), o = v.origin();
  const std::uint8_t k = static_cast<std::uint8_t>(v.kind());
  mix(&d, sizeof(d));
  mix(&s, sizeof(s));
  mix(&o, sizeof(o));
  mix(&k, sizeof(k));
  if (!v.data().empty()) mix(v.data().data(), v.data().size() * sizeof(float));
  return h;
}

}  // namespace longiseg
