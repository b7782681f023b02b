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
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "longiseg/error.hpp"
#include "longiseg/volume.hpp"

#include <json.hpp>

namespace longiseg {

// Axis conventions used throughout: +x is patient-left, +y anterior,
// +z superior. A sagittal slice fixes x; an axial slice fixes z. The
// "outermost lateral" rib slice is therefore max-x for left ribs and min-x
// for right ribs, and "most inferior" means min-z.

enum class Side : std::uint8_t { NONE, LEFT, RIGHT };

inline char side_char(Side s) { return s == Side::LEFT ? 'L' : 'R'; }

/// Identity of one of the 46 skeletal landmarks: 17 vertebra centroids
/// (T1-T12, L1-L5), 24 lateral rib points, 4 clavicle end points and the
/// inferior sternum point.
struct LandmarkId {
  enum class Kind : std::uint8_t {
    VERTEBRA_COM,
    RIB_LATERAL,
    CLAVICLE_INNER,
    CLAVICLE_OUTER,
    STERNUM_INFERIOR,
  };

  Kind kind = Kind::VERTEBRA_COM;
  Side side = Side::NONE;
  // Vertebra ordinal 1..17 (1..12 thoracic, 13..17 lumbar) or rib 1..12.
  int number = 0;

  friend constexpr auto operator<=>(const LandmarkId&, const LandmarkId&) = default;

  std::string str() const {
    char buf[32];
    switch (kind) {
      case Kind::VERTEBRA_COM:
        std::snprintf(buf, sizeof(buf), "VERTEBRA_COM_%c%02d", number <= 12 ? 'T' : 'L',
                      number <= 12 ? number : number - 12);
        return buf;
      case Kind::RIB_LATERAL:
        std::snprintf(buf, sizeof(buf), "RIB_LATERAL_%c_%02d", side_char(side), number);
        return buf;
      case Kind::CLAVICLE_INNER:
        std::snprintf(buf, sizeof(buf), "CLAVICLE_INNER_%c", side_char(side));
        return buf;
      case Kind::CLAVICLE_OUTER:
        std::snprintf(buf, sizeof(buf), "CLAVICLE_OUTER_%c", side_char(side));
        return buf;
      case Kind::STERNUM_INFERIOR:
        return "STERNUM_INFERIOR";
    }
    return "?";
  }

  static LandmarkId parse(const std::string& s) {
    auto side_of = [](char c) {
      if (c == 'L') return Side::LEFT;
      if (c == 'R') return Side::RIGHT;
      throw format_error("landmark id: bad side '" + std::string(1, c) + "'");
    };
    if (s.rfind("VERTEBRA_COM_", 0) == 0 && s.size() == 16) {
      const char g = s[13];
      const int n = std::stoi(s.substr(14));
      if (g == 'T' && n >= 1 && n <= 12) return {Kind::VERTEBRA_COM, Side::NONE, n};
      if (g == 'L' && n >= 1 && n <= 5) return {Kind::VERTEBRA_COM, Side::NONE, 12 + n};
    } else if (s.rfind("RIB_LATERAL_", 0) == 0 && s.size() == 16) {
      const int n = std::stoi(s.substr(14));
      if (s[13] == '_' && n >= 1 && n <= 12) return {Kind::RIB_LATERAL, side_of(s[12]), n};
    } else if (s.rfind("CLAVICLE_INNER_", 0) == 0 && s.size() == 16) {
      return {Kind::CLAVICLE_INNER, side_of(s[15]), 0};
    } else if (s.rfind("CLAVICLE_OUTER_", 0) == 0 && s.size() == 16) {
      return {Kind::CLAVICLE_OUTER, side_of(s[15]), 0};
    } else if (s == "STERNUM_INFERIOR") {
      return {Kind::STERNUM_INFERIOR, Side::NONE, 0};
    }
    throw format_error("landmark id: cannot parse \"" + s + "\"");
  }
};

/// The full fixed enumeration, in canonical order. Exactly 46 entries.
inline const std::vector<LandmarkId>& all_landmark_ids() {
  static const std::vector<LandmarkId> ids = [] {
    std::vector<LandmarkId> v;
    for (int n = 1; n <= 17; ++n) v.push_back({LandmarkId::Kind::VERTEBRA_COM, Side::NONE, n});
    for (Side s : {Side::LEFT, Side::RIGHT})
      for (int n = 1; n <= 12; ++n) v.push_back({LandmarkId::Kind::RIB_LATERAL, s, n});
    for (Side s : {Side::LEFT, Side::RIGHT}) v.push_back({LandmarkId::Kind::CLAVICLE_INNER, s, 0});
    for (Side s : {Side::LEFT, Side::RIGHT}) v.push_back({LandmarkId::Kind::CLAVICLE_OUTER, s, 0});
    v.push_back({LandmarkId::Kind::STERNUM_INFERIOR, Side::NONE, 0});
    std::sort(v.begin(), v.end());
    return v;
  }();
  return ids;
}

/// A named anatomical point in world millimetres.
struct Landmark {
  LandmarkId id;
  Vec3 pos_mm;
};

// ---------------------------------------------------------------------------
// Bone label map: which integer label in a segmentation volume is which bone.
// ---------------------------------------------------------------------------

enum class BoneKind : std::uint8_t { VERTEBRA, RIB, CLAVICLE, STERNUM };

struct BoneSpec {
  BoneKind kind = BoneKind::VERTEBRA;
  Side side = Side::NONE;
  int number = 0;  // vertebra ordinal 1..17 or rib 1..12

  friend constexpr auto operator<=>(const BoneSpec&, const BoneSpec&) = default;

  /// Landmarks this bone contributes when fully visible.
  std::vector<LandmarkId> landmark_ids() const {
    switch (kind) {
      case BoneKind::VERTEBRA: return {{LandmarkId::Kind::VERTEBRA_COM, Side::NONE, number}};
      case BoneKind::RIB: return {{LandmarkId::Kind::RIB_LATERAL, side, number}};
      case BoneKind::CLAVICLE:
        return {{LandmarkId::Kind::CLAVICLE_INNER, side, 0},
                {LandmarkId::Kind::CLAVICLE_OUTER, side, 0}};
      case BoneKind::STERNUM: return {{LandmarkId::Kind::STERNUM_INFERIOR, Side::NONE, 0}};
    }
    return {};
  }
};

/// Configuration mapping label values to bones. Injective over declared
/// labels; adapts any segmenter's labelling scheme.
class BoneLabelMap {
 public:
  BoneLabelMap() = default;

  void add(int label, BoneSpec spec) {
    if (label <= 0) throw invalid_argument_error("bone label map: labels must be positive");
    for (const auto& [l, s] : labels_)
      if (s == spec)
        throw invalid_argument_error("bone label map: bone declared twice (labels " +
                                     std::to_string(l) + " and " + std::to_string(label) + ")");
    if (!labels_.emplace(label, spec).second)
      throw invalid_argument_error("bone label map: duplicate label " + std::to_string(label));
  }

  const std::map<int, BoneSpec>& labels() const { return labels_; }

  std::optional<BoneSpec> find(int label) const {
    auto it = labels_.find(label);
    if (it == labels_.end()) return std::nullopt;
    return it->second;
  }

  /// The scheme the phantom generator emits: vertebrae 1..17 (T1..L5), left
  /// ribs 18..29, right ribs 30..41, clavicles 42 (L) / 43 (R), sternum 44.
  static BoneLabelMap default_map() {
    BoneLabelMap m;
    for (int n = 1; n <= 17; ++n) m.add(n, {BoneKind::VERTEBRA, Side::NONE, n});
    for (int n = 1; n <= 12; ++n) m.add(17 + n, {BoneKind::RIB, Side::LEFT, n});
    for (int n = 1; n <= 12; ++n) m.add(29 + n, {BoneKind::RIB, Side::RIGHT, n});
    m.add(42, {BoneKind::CLAVICLE, Side::LEFT, 0});
    m.add(43, {BoneKind::CLAVICLE, Side::RIGHT, 0});
    m.add(44, {BoneKind::STERNUM, Side::NONE, 0});
    return m;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [label, spec] : labels_) {
      nlohmann::json e;
      e["value"] = label;
      switch (spec.kind) {
        case BoneKind::VERTEBRA: {
          char lev[16];
          std::snprintf(lev, sizeof(lev), "%c%02d", spec.number <= 12 ? 'T' : 'L',
                        spec.number <= 12 ? spec.number : spec.number - 12);
          e["bone"] = "vertebra";
          e["level"] = lev;
          break;
        }
        case BoneKind::RIB:
          e["bone"] = "rib";
          e["side"] = std::string(1, side_char(spec.side));
          e["index"] = spec.number;
          break;
        case BoneKind::CLAVICLE:
          e["bone"] = "clavicle";
          e["side"] = std::string(1, side_char(spec.side));
          break;
        case BoneKind::STERNUM:
          e["bone"] = "sternum";
          break;
      }
      arr.push_back(e);
    }
    return nlohmann::json{{"labels", arr}};
  }

  static BoneLabelMap from_json(const nlohmann::json& j) {
    if (!j.contains("labels") || !j.at("labels").is_array())
      throw format_error("bone label map: missing \"labels\" array");
    BoneLabelMap m;
    for (const auto& e : j.at("labels")) {
      if (!e.contains("value") || !e.contains("bone"))
        throw format_error("bone label map: entry missing \"value\" or \"bone\"");
      const int label = e.at("value").get<int>();
      const std::string bone = e.at("bone").get<std::string>();
      auto side_of = [&]() {
        const std::string s = e.at("side").get<std::string>();
        if (s == "L") return Side::LEFT;
        if (s == "R") return Side::RIGHT;
        throw format_error("bone label map: side must be \"L\" or \"R\"");
      };
      if (bone == "vertebra") {
        const std::string lev = e.at("level").get<std::string>();
        if (lev.size() < 2) throw format_error("bone label map: bad vertebra level \"" + lev + "\"");
        const int n = std::stoi(lev.substr(1));
        int ordinal;
        if (lev[0] == 'T' && n >= 1 && n <= 12) ordinal = n;
        else if (lev[0] == 'L' && n >= 1 && n <= 5) ordinal = 12 + n;
        else throw format_error("bone label map: bad vertebra level \"" + lev + "\"");
        m.add(label, {BoneKind::VERTEBRA, Side::NONE, ordinal});
      } else if (bone == "rib") {
        const int n = e.at("index").get<int>();
        if (n < 1 || n > 12) throw format_error("bone label map: rib index out of 1..12");
        m.add(label, {BoneKind::RIB, side_of(), n});
      } else if (bone == "clavicle") {
        m.add(label, {BoneKind::CLAVICLE, side_of(), 0});
      } else if (bone == "sternum") {
        m.add(label, {BoneKind::STERNUM, Side::NONE, 0});
      } else {
        throw format_error("bone label map: unknown bone \"" + bone + "\"");
      }
    }
    return m;
  }

 private:
  std::map<int, BoneSpec> labels_;
};

// ---------------------------------------------------------------------------
// Landmark extraction
// ---------------------------------------------------------------------------

namespace detail {

struct SliceAcc {
  std::size_t count = 0;
  double sx = 0, sy = 0, sz = 0;

  void add(int x, int y, int z) {
    ++count;
    sx += x;
    sy += y;
    sz += z;
  }
  Vec3 com_world(const Volume& v) const {
    const Vec3 s = v.spacing(), o = v.origin();
    const double n = static_cast<double>(count);
    return {o.x + sx / n * s.x, o.y + sy / n * s.y, o.z + sz / n * s.z};
  }
};

struct BoneAcc {
  SliceAcc all;
  int min_x = 1 << 30, max_x = -(1 << 30);
  int min_z = 1 << 30;
};

}  // namespace detail

/// Compute the landmarks defined by every mapped bone present in `labels`.
/// Unknown label values are collected into `unknown_labels` (when given) and
/// otherwise ignored. Positions are voxel centroids in world millimetres.
inline std::vector<Landmark> compute_landmarks(const Volume& labels, const BoneLabelMap& map,
                                               std::vector<int>* unknown_labels = nullptr) {
  if (labels.kind() != ElementKind::LABEL_UINT)
    throw invalid_argument_error("compute_landmarks: volume must be LABEL_UINT");

  std::unordered_map<int, detail::BoneAcc> acc;
  std::set<int> unknown;
  const Index3 d = labels.dims();

  std::size_t i = 0;
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x, ++i) {
        const int label = static_cast<int>(labels.data()[i]);
        if (label == 0) continue;
        if (!map.find(label)) {
          unknown.insert(label);
          continue;
        }
        auto& a = acc[label];
        a.all.add(x, y, z);
        a.min_x = std::min(a.min_x, x);
        a.max_x = std::max(a.max_x, x);
        a.min_z = std::min(a.min_z, z);
      }
  if (unknown_labels) unknown_labels->assign(unknown.begin(), unknown.end());

  // Slice centroids for the labels that need them: the lateral rib slice,
  // both clavicle end slices and the inferior sternum slice.
  struct SliceReq {
    int label;
    int axis;  // 0 = sagittal (fix x), 2 = axial (fix z)
    int index;
    detail::SliceAcc acc;
    LandmarkId id;
  };
  std::vector<SliceReq> reqs;
  std::vector<Landmark> out;

  for (const auto& [label, a] : acc) {
    const BoneSpec spec = *map.find(label);
    switch (spec.kind) {
      case BoneKind::VERTEBRA:
        out.push_back({{LandmarkId::Kind::VERTEBRA_COM, Side::NONE, spec.number},
                       a.all.com_world(labels)});
        break;
      case BoneKind::RIB: {
        const int slice = spec.side == Side::LEFT ? a.max_x : a.min_x;
        reqs.push_back({label, 0, slice, {}, {LandmarkId::Kind::RIB_LATERAL, spec.side, spec.number}});
        break;
      }
      case BoneKind::CLAVICLE: {
        const int inner = spec.side == Side::LEFT ? a.min_x : a.max_x;
        const int outer = spec.side == Side::LEFT ? a.max_x : a.min_x;
        reqs.push_back({label, 0, inner, {}, {LandmarkId::Kind::CLAVICLE_INNER, spec.side, 0}});
        reqs.push_back({label, 0, outer, {}, {LandmarkId::Kind::CLAVICLE_OUTER, spec.side, 0}});
        break;
      }
      case BoneKind::STERNUM:
        reqs.push_back({label, 2, a.min_z, {}, {LandmarkId::Kind::STERNUM_INFERIOR, Side::NONE, 0}});
        break;
    }
  }

  if (!reqs.empty()) {
    std::unordered_map<int, std::vector<SliceReq*>> by_label;
    for (auto& r : reqs) by_label[r.label].push_back(&r);
    i = 0;
    for (int z = 0; z < d.z; ++z)
      for (int y = 0; y < d.y; ++y)
        for (int x = 0; x < d.x; ++x, ++i) {
          const int label = static_cast<int>(labels.data()[i]);
          if (label == 0) continue;
          auto it = by_label.find(label);
          if (it == by_label.end()) continue;
          for (auto* r : it->second) {
            const int coord = r->axis == 0 ? x : z;
            if (coord == r->index) r->acc.add(x, y, z);
          }
        }
    for (auto& r : reqs) out.push_back({r.id, r.acc.com_world(labels)});
  }

  std::sort(out.begin(), out.end(), [](const Landmark& a, const Landmark& b) { return a.id < b.id; });
  return out;
}

/// The labels whose voxels touch any of the six grid faces: those bones are
/// not fully inside the field of view.
inline std::set<int> labels_touching_boundary(const Volume& labels) {
  const Index3 d = labels.dims();
  std::set<int> touched;
  auto visit = [&](int x, int y, int z) {
    const int label = static_cast<int>(labels.at(x, y, z));
    if (label != 0) touched.insert(label);
  };
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y) {
      visit(0, y, z);
      visit(d.x - 1, y, z);
    }
  for (int z = 0; z < d.z; ++z)
    for (int x = 0; x < d.x; ++x) {
      visit(x, 0, z);
      visit(x, d.y - 1, z);
    }
  for (int y = 0; y < d.y; ++y)
    for (int x = 0; x < d.x; ++x) {
      visit(x, y, 0);
      visit(x, y, d.z - 1);
    }
  return touched;
}

/// Drop every landmark whose source bone is not fully visible, i.e. whose
/// label mask touches a face of the grid.
inline std::vector<Landmark> visibility_filter(const Volume& labels, const BoneLabelMap& map,
                                               const std::vector<Landmark>& landmarks) {
  const std::set<int> touched = labels_touching_boundary(labels);
  std::set<LandmarkId> discard;
  for (int label : touched)
    if (auto spec = map.find(label))
      for (const LandmarkId& id : spec->landmark_ids()) discard.insert(id);

  std::vector<Landmark> out;
  out.reserve(landmarks.size());
  for (const Landmark& lm : landmarks)
    if (!discard.count(lm.id)) out.push_back(lm);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json landmarks_to_json(const std::vector<Landmark>& lms) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Landmark& lm : lms)
    arr.push_back({{"id", lm.id.str()}, {"pos_mm", {lm.pos_mm.x, lm.pos_mm.y, lm.pos_mm.z}}});
  return arr;
}

inline std::vector<Landmark> landmarks_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw format_error("landmark set: expected a JSON array");
  std::vector<Landmark> out;
  for (const auto& e : j) {
    if (!e.contains("id") || !e.contains("pos_mm"))
      throw format_error("landmark set: entry missing \"id\" or \"pos_mm\"");
    const auto& p = e.at("pos_mm");
    if (!p.is_array() || p.size() != 3)
      throw format_error("landmark set: \"pos_mm\" must be [x,y,z]");
    out.push_back({LandmarkId::parse(e.at("id").get<std::string>()),
                   {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()}});
  }
  return out;
}

}  // namespace longiseg
