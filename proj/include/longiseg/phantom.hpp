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
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "longiseg/error.hpp"
#include "longiseg/landmarks.hpp"
#include "longiseg/manifest.hpp"
#include "longiseg/rigid.hpp"
#include "longiseg/rng.hpp"
#include "longiseg/volume.hpp"
#include "longiseg/volume_io.hpp"

#include <json.hpp>

namespace longiseg {

// ---------------------------------------------------------------------------
// Scene primitives, defined in atlas space (+x patient-left, +y anterior,
// +z superior, origin at the grid center).
// ---------------------------------------------------------------------------

namespace phantom_detail {

struct Ellipsoid {
  Vec3 center, radii;
  bool contains(Vec3 p) const {
    const Vec3 d = p - center;
    const double s = (d.x / radii.x) * (d.x / radii.x) + (d.y / radii.y) * (d.y / radii.y) +
                     (d.z / radii.z) * (d.z / radii.z);
    return s <= 1.0;
  }
  Vec3 bbox_min() const { return center - radii; }
  Vec3 bbox_max() const { return center + radii; }
};

struct Capsule {
  Vec3 a, b;
  double radius = 1.0;
  double axis_distance(Vec3 p) const {
    const Vec3 ab = b - a;
    const double len2 = norm2(ab);
    double t = len2 > 0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (a + ab * t));
  }
  bool contains(Vec3 p) const { return axis_distance(p) <= radius; }
  Vec3 bbox_min() const {
    return {std::min(a.x, b.x) - radius, std::min(a.y, b.y) - radius, std::min(a.z, b.z) - radius};
  }
  Vec3 bbox_max() const {
    return {std::max(a.x, b.x) + radius, std::max(a.y, b.y) + radius, std::max(a.z, b.z) + radius};
  }
};

struct Box {
  Vec3 center, half;
  bool contains(Vec3 p) const {
    const Vec3 d = p - center;
    return std::abs(d.x) <= half.x && std::abs(d.y) <= half.y && std::abs(d.z) <= half.z;
  }
  Vec3 bbox_min() const { return center - half; }
  Vec3 bbox_max() const { return center + half; }
  double outside_distance(Vec3 p) const {
    const Vec3 d = p - center;
    const double ex = std::max(std::abs(d.x) - half.x, 0.0);
    const double ey = std::max(std::abs(d.y) - half.y, 0.0);
    const double ez = std::max(std::abs(d.z) - half.z, 0.0);
    return std::sqrt(ex * ex + ey * ey + ez * ez);
  }
};

using Shape = std::variant<Ellipsoid, Capsule, Box>;

inline bool shape_contains(const Shape& s, Vec3 p) {
  return std::visit([&](const auto& sh) { return sh.contains(p); }, s);
}
inline Vec3 shape_bbox_min(const Shape& s) {
  return std::visit([](const auto& sh) { return sh.bbox_min(); }, s);
}
inline Vec3 shape_bbox_max(const Shape& s) {
  return std::visit([](const auto& sh) { return sh.bbox_max(); }, s);
}

/// Clearance from a point to a shape's surface (conservative for ellipsoids,
/// which use their bounding sphere). Used only to keep generated lesions off
/// the skeleton.
inline double shape_clearance(const Shape& s, Vec3 p) {
  if (const auto* e = std::get_if<Ellipsoid>(&s)) {
    const double r = std::max({e->radii.x, e->radii.y, e->radii.z});
    return norm(p - e->center) - r;
  }
  if (const auto* c = std::get_if<Capsule>(&s)) return c->axis_distance(p) - c->radius;
  return std::get<Box>(s).outside_distance(p);
}

struct BonePrimitive {
  int label = 0;
  Shape shape;
};

}  // namespace phantom_detail

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Geometry of the synthetic thorax. Every one of the 46 landmarks is
/// producible from it: 17 vertebra ellipsoids, 12 rib capsule pairs with
/// strictly distinct lateral reaches (pair 6 is the widest, so a lateral
/// field-of-view crop cuts exactly one pair first), clavicle capsules and a
/// sternum box.
struct SkeletonLayout {
  double vertebra_top_z = 80.0;
  double vertebra_pitch = 10.0;
  Vec3 vertebra_radii{10.0, 8.0, 4.2};
  double vertebra_y = -25.0;

  double rib_radius = 3.0;
  double rib_root_x = 14.0;
  double rib_root_y = -25.0;
  double rib_tip_y = -6.0;
  // Lateral reach of each rib pair; distinct on purpose.
  std::array<double, 12> rib_lateral{32.0, 35.0, 38.0, 41.0, 43.5, 48.0,
                                     44.5, 42.0, 40.0, 37.5, 35.0, 32.5};

  double clavicle_radius = 3.5;
  Vec3 clavicle_inner{8.0, 15.0, 88.0};
  Vec3 clavicle_outer{42.0, 8.0, 88.0};

  Vec3 sternum_center{0.0, 26.0, 51.0};
  Vec3 sternum_half{7.0, 4.0, 32.0};

  Vec3 body_radii{60.0, 48.0, 0.0};  // elliptic cylinder in x/y
  double body_half_z = 104.0;
};

struct PhantomTumour {
  std::string id = "tumour_01";
  Vec3 center{30.0, 14.0, 14.0};
  double radius_mm = 12.0;
  double hu = 80.0;
  std::vector<double> scales;  // per time point; empty means all 1.0
};

struct PhantomDistractors {
  int count = 2;
  double radius_min = 5.5;
  double radius_max = 9.0;
  double hu = 80.0;
};

struct PhantomConfig {
  Index3 dims{96, 96, 110};
  Vec3 spacing{1.5, 1.5, 2.0};
  std::optional<Vec3> origin;  // default: grid centered on the atlas origin
  int n_time_points = 4;
  double max_rotation_deg = 8.0;
  double max_translation_mm = 10.0;
  std::optional<std::vector<RigidTransform>> transforms;  // explicit override
  std::vector<PhantomTumour> tumours{PhantomTumour{}};
  PhantomDistractors distractors;
  double noise_sigma = 5.0;
  std::uint64_t seed = 1;
  double bone_hu = 700.0;
  double soft_tissue_hu = 0.0;
  double background_hu = -1000.0;
  double lesion_band_lo = 40.0;
  double lesion_band_hi = 120.0;
  SkeletonLayout skeleton;

  Vec3 resolved_origin() const {
    if (origin) return *origin;
    return {-(dims.x - 1) * spacing.x / 2.0, -(dims.y - 1) * spacing.y / 2.0,
            -(dims.z - 1) * spacing.z / 2.0};
  }

  void validate() const {
    if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0)
      throw invalid_argument_error("phantom: dims must be positive");
    if (!(spacing.x > 0 && spacing.y > 0 && spacing.z > 0))
      throw invalid_argument_error("phantom: spacing must be positive");
    if (n_time_points < 1) throw invalid_argument_error("phantom: need at least one time point");
    if (transforms && static_cast<int>(transforms->size()) != n_time_points)
      throw invalid_argument_error("phantom: explicit transforms must match n_time_points");
    if (bone_hu >= lesion_band_lo && bone_hu <= lesion_band_hi)
      throw invalid_argument_error("phantom: bone HU must lie outside the lesion band");
    for (const auto& t : tumours) {
      if (t.radius_mm <= 0) throw invalid_argument_error("phantom: tumour radius must be > 0");
      if (t.hu < lesion_band_lo || t.hu > lesion_band_hi)
        throw invalid_argument_error("phantom: tumour HU must lie inside the lesion band");
      if (!t.scales.empty() && static_cast<int>(t.scales.size()) != n_time_points)
        throw invalid_argument_error("phantom: tumour scale schedule must match n_time_points");
      for (double s : t.scales)
        if (s < 0) throw invalid_argument_error("phantom: scale factors must be >= 0");
    }
    if (distractors.count < 0) throw invalid_argument_error("phantom: distractor count < 0");
    if (distractors.count > 0) {
      if (distractors.radius_min <= 0 || distractors.radius_max < distractors.radius_min)
        throw invalid_argument_error("phantom: distractor radius range invalid");
      if (distractors.hu < lesion_band_lo || distractors.hu > lesion_band_hi)
        throw invalid_argument_error("phantom: distractor HU must lie inside the lesion band");
    }
    if (noise_sigma < 0) throw invalid_argument_error("phantom: noise_sigma < 0");
  }

  nlohmann::json to_json() const {
    nlohmann::json jt = nlohmann::json::array();
    for (const auto& t : tumours) {
      nlohmann::json e{{"id", t.id},
                       {"center", {t.center.x, t.center.y, t.center.z}},
                       {"radius_mm", t.radius_mm},
                       {"hu", t.hu}};
      if (!t.scales.empty()) e["scales"] = t.scales;
      jt.push_back(e);
    }
    nlohmann::json j{{"dims", {dims.x, dims.y, dims.z}},
                     {"spacing", {spacing.x, spacing.y, spacing.z}},
                     {"n_time_points", n_time_points},
                     {"max_rotation_deg", max_rotation_deg},
                     {"max_translation_mm", max_translation_mm},
                     {"tumours", jt},
                     {"distractors",
                      {{"count", distractors.count},
                       {"radius_range", {distractors.radius_min, distractors.radius_max}},
                       {"hu", distractors.hu}}},
                     {"noise_sigma", noise_sigma},
                     {"seed", seed},
                     {"bone_hu", bone_hu},
                     {"lesion_band", {lesion_band_lo, lesion_band_hi}}};
    if (origin) j["origin"] = {origin->x, origin->y, origin->z};
    if (transforms) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& t : *transforms) arr.push_back(t.to_json());
      j["transforms"] = arr;
    }
    return j;
  }

  static PhantomConfig from_json(const nlohmann::json& j) {
    PhantomConfig c;
    auto vec3 = [](const nlohmann::json& a, const char* what) -> Vec3 {
      if (!a.is_array() || a.size() != 3)
        throw format_error(std::string("phantom config: \"") + what + "\" must be [3]");
      return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
    };
    if (j.contains("dims")) {
      const auto& a = j.at("dims");
      if (!a.is_array() || a.size() != 3) throw format_error("phantom config: \"dims\" must be [3]");
      c.dims = {a[0].get<int>(), a[1].get<int>(), a[2].get<int>()};
    }
    if (j.contains("spacing")) c.spacing = vec3(j.at("spacing"), "spacing");
    if (j.contains("origin")) c.origin = vec3(j.at("origin"), "origin");
    c.n_time_points = j.value("n_time_points", c.n_time_points);
    c.max_rotation_deg = j.value("max_rotation_deg", c.max_rotation_deg);
    c.max_translation_mm = j.value("max_translation_mm", c.max_translation_mm);
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.seed = j.value("seed", c.seed);
    c.bone_hu = j.value("bone_hu", c.bone_hu);
    if (j.contains("lesion_band")) {
      c.lesion_band_lo = j.at("lesion_band")[0].get<double>();
      c.lesion_band_hi = j.at("lesion_band")[1].get<double>();
    }
    if (j.contains("transforms")) {
      std::vector<RigidTransform> ts;
      for (const auto& e : j.at("transforms")) ts.push_back(RigidTransform::from_json(e));
      c.transforms = std::move(ts);
    }
    if (j.contains("tumours")) {
      c.tumours.clear();
      int n = 0;
      for (const auto& e : j.at("tumours")) {
        PhantomTumour t;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "tumour_%02d", ++n);
        t.id = e.value("id", std::string(buf));
        if (e.contains("center")) t.center = vec3(e.at("center"), "tumour center");
        t.radius_mm = e.value("radius_mm", t.radius_mm);
        t.hu = e.value("hu", t.hu);
        if (e.contains("scales")) t.scales = e.at("scales").get<std::vector<double>>();
        c.tumours.push_back(std::move(t));
      }
    }
    if (j.contains("distractors")) {
      const auto& e = j.at("distractors");
      c.distractors.count = e.value("count", c.distractors.count);
      if (e.contains("radius_range")) {
        c.distractors.radius_min = e.at("radius_range")[0].get<double>();
        c.distractors.radius_max = e.at("radius_range")[1].get<double>();
      }
      c.distractors.hu = e.value("hu", c.distractors.hu);
    }
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

struct GeneratedStudy {
  StudyManifest manifest;
  std::filesystem::path dir;
  std::filesystem::path manifest_path;
  std::filesystem::path bone_map_path;
  /// Atlas -> time-point-world transforms; the true src->dst motion between
  /// scans i and j is T_j ∘ T_i⁻¹.
  std::vector<RigidTransform> true_transforms;
  /// Analytic landmark positions per time point (primitive geometry mapped
  /// through the true transform; within COM discretization of the computed
  /// landmarks).
  std::vector<std::vector<Landmark>> analytic_landmarks;
};

namespace phantom_detail {

inline std::vector<BonePrimitive> build_skeleton(const SkeletonLayout& sk) {
  std::vector<BonePrimitive> bones;
  // Vertebrae: labels 1..17 (T1..T12, L1..L5), stacked top-down.
  for (int i = 0; i < 17; ++i) {
    const double z = sk.vertebra_top_z - sk.vertebra_pitch * i;
    bones.push_back({1 + i, Ellipsoid{{0.0, sk.vertebra_y, z}, sk.vertebra_radii}});
  }
  // Rib pairs at the thoracic vertebrae: left 18..29, right 30..41.
  for (int i = 0; i < 12; ++i) {
    const double z = sk.vertebra_top_z - sk.vertebra_pitch * i;
    const double lat = sk.rib_lateral[static_cast<std::size_t>(i)];
    bones.push_back({18 + i, Capsule{{sk.rib_root_x, sk.rib_root_y, z},
                                     {lat, sk.rib_tip_y, z},
                                     sk.rib_radius}});
    bones.push_back({30 + i, Capsule{{-sk.rib_root_x, sk.rib_root_y, z},
                                     {-lat, sk.rib_tip_y, z},
                                     sk.rib_radius}});
  }
  // Clavicles: 42 left, 43 right.
  bones.push_back({42, Capsule{sk.clavicle_inner, sk.clavicle_outer, sk.clavicle_radius}});
  bones.push_back({43, Capsule{{-sk.clavicle_inner.x, sk.clavicle_inner.y, sk.clavicle_inner.z},
                               {-sk.clavicle_outer.x, sk.clavicle_outer.y, sk.clavicle_outer.z},
                               sk.clavicle_radius}});
  // Sternum: 44.
  bones.push_back({44, Box{sk.sternum_center, sk.sternum_half}});
  return bones;
}

/// Analytic landmark positions in atlas space.
inline std::vector<Landmark> analytic_atlas_landmarks(const SkeletonLayout& sk) {
  std::vector<Landmark> lms;
  for (int i = 0; i < 17; ++i) {
    const double z = sk.vertebra_top_z - sk.vertebra_pitch * i;
    lms.push_back({{LandmarkId::Kind::VERTEBRA_COM, Side::NONE, i + 1}, {0.0, sk.vertebra_y, z}});
  }
  for (int i = 0; i < 12; ++i) {
    const double z = sk.vertebra_top_z - sk.vertebra_pitch * i;
    const double lat = sk.rib_lateral[static_cast<std::size_t>(i)] + sk.rib_radius;
    lms.push_back({{LandmarkId::Kind::RIB_LATERAL, Side::LEFT, i + 1}, {lat, sk.rib_tip_y, z}});
    lms.push_back({{LandmarkId::Kind::RIB_LATERAL, Side::RIGHT, i + 1}, {-lat, sk.rib_tip_y, z}});
  }
  const double ci = sk.clavicle_inner.x - sk.clavicle_radius;
  const double co = sk.clavicle_outer.x + sk.clavicle_radius;
  lms.push_back({{LandmarkId::Kind::CLAVICLE_INNER, Side::LEFT, 0},
                 {ci, sk.clavicle_inner.y, sk.clavicle_inner.z}});
  lms.push_back({{LandmarkId::Kind::CLAVICLE_INNER, Side::RIGHT, 0},
                 {-ci, sk.clavicle_inner.y, sk.clavicle_inner.z}});
  lms.push_back({{LandmarkId::Kind::CLAVICLE_OUTER, Side::LEFT, 0},
                 {co, sk.clavicle_outer.y, sk.clavicle_outer.z}});
  lms.push_back({{LandmarkId::Kind::CLAVICLE_OUTER, Side::RIGHT, 0},
                 {-co, sk.clavicle_outer.y, sk.clavicle_outer.z}});
  lms.push_back({{LandmarkId::Kind::STERNUM_INFERIOR, Side::NONE, 0},
                 {sk.sternum_center.x, sk.sternum_center.y, sk.sternum_center.z - sk.sternum_half.z}});
  std::sort(lms.begin(), lms.end(), [](const Landmark& a, const Landmark& b) { return a.id < b.id; });
  return lms;
}

/// Visit every grid voxel whose atlas-space point lies inside the shape,
/// where atlas points map to world via `to_world`. Only the voxels covered
/// by the shape's transformed bounding box are tested.
template <typename ShapeT, typename Fn>
void rasterize(const ShapeT& shape, const RigidTransform& to_world, const RigidTransform& to_atlas,
               const Volume& grid, Fn&& fn) {
  const Vec3 lo = shape.bbox_min(), hi = shape.bbox_max();
  Vec3 wmin{1e300, 1e300, 1e300}, wmax{-1e300, -1e300, -1e300};
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 c{corner & 1 ? hi.x : lo.x, corner & 2 ? hi.y : lo.y, corner & 4 ? hi.z : lo.z};
    const Vec3 w = to_world.apply(c);
    wmin = {std::min(wmin.x, w.x), std::min(wmin.y, w.y), std::min(wmin.z, w.z)};
    wmax = {std::max(wmax.x, w.x), std::max(wmax.y, w.y), std::max(wmax.z, w.z)};
  }
  const Vec3 s = grid.spacing(), o = grid.origin();
  const Index3 d = grid.dims();
  auto lo_idx = [&](double w, double sp, double org, int dim) {
    return std::clamp(static_cast<int>(std::floor((w - org) / sp)) - 1, 0, dim - 1);
  };
  auto hi_idx = [&](double w, double sp, double org, int dim) {
    return std::clamp(static_cast<int>(std::ceil((w - org) / sp)) + 1, 0, dim - 1);
  };
  const int x0 = lo_idx(wmin.x, s.x, o.x, d.x), x1 = hi_idx(wmax.x, s.x, o.x, d.x);
  const int y0 = lo_idx(wmin.y, s.y, o.y, d.y), y1 = hi_idx(wmax.y, s.y, o.y, d.y);
  const int z0 = lo_idx(wmin.z, s.z, o.z, d.z), z1 = hi_idx(wmax.z, s.z, o.z, d.z);

  for (int z = z0; z <= z1; ++z)
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Vec3 w{o.x + x * s.x, o.y + y * s.y, o.z + z * s.z};
        if (shape.contains(to_atlas.apply(w))) fn(x, y, z);
      }
}

inline RigidTransform random_rigid(Rng& rng, double max_rot_deg, double max_trans_mm) {
  RigidTransform t;
  Vec3 axis{rng.gaussian(), rng.gaussian(), rng.gaussian()};
  if (norm(axis) < 1e-9) axis = {0, 0, 1};
  const double angle = deg_to_rad(rng.uniform(-max_rot_deg, max_rot_deg));
  t.R = rotation_about_axis(axis, angle);
  Vec3 dir{rng.gaussian(), rng.gaussian(), rng.gaussian()};
  const double dn = norm(dir);
  t.t = dn > 1e-9 ? dir * (rng.uniform(0.0, max_trans_mm) / dn) : Vec3{};
  return t;
}

}  // namespace phantom_detail

/// Generate a longitudinal phantom study into `out_dir`: per time point an
/// HU image, a bone label volume and per-tumour ground-truth masks, with the
/// rigid assembly moved by that time point's true transform (time 0 is the
/// identity unless transforms are given explicitly) and lesions resized per
/// schedule. Also writes the study manifest, the bone label map, the true
/// transforms and the analytic landmark ground truth.
inline GeneratedStudy generate_study(const PhantomConfig& cfg, const std::filesystem::path& out_dir,
                                     const std::string& patient_id = "phantom") {
  namespace fs = std::filesystem;
  namespace pd = phantom_detail;
  cfg.validate();
  fs::create_directories(out_dir);

  const Vec3 origin = cfg.resolved_origin();
  const Volume grid_proto(cfg.dims, cfg.spacing, origin, ElementKind::HU_INT);
  const auto bones = pd::build_skeleton(cfg.skeleton);
  const auto atlas_landmarks = pd::analytic_atlas_landmarks(cfg.skeleton);

  // Time-point transforms.
  std::vector<RigidTransform> transforms;
  if (cfg.transforms) {
    transforms = *cfg.transforms;
  } else {
    transforms.resize(cfg.n_time_points);
    for (int t = 1; t < cfg.n_time_points; ++t) {
      Rng rng = Rng::derive(cfg.seed, 2000 + static_cast<std::uint64_t>(t));
      transforms[t] = pd::random_rigid(rng, cfg.max_rotation_deg, cfg.max_translation_mm);
    }
  }

  // Distractor placement, once, in atlas space.
  struct Lesion {
    Vec3 center;
    double radius;
  };
  std::vector<Lesion> distractors;
  if (cfg.distractors.count > 0) {
    Rng rng = Rng::derive(cfg.seed, 1000);
    const SkeletonLayout& sk = cfg.skeleton;
    for (int i = 0; i < cfg.distractors.count; ++i) {
      bool placed = false;
      for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
        const double r = rng.uniform(cfg.distractors.radius_min, cfg.distractors.radius_max);
        const double margin = r + 3.0;
        const Vec3 p{rng.uniform(-(sk.body_radii.x - margin), sk.body_radii.x - margin),
                     rng.uniform(-(sk.body_radii.y - margin), sk.body_radii.y - margin),
                     rng.uniform(-(sk.body_half_z - margin), sk.body_half_z - margin)};
        const double ex = p.x / (sk.body_radii.x - margin);
        const double ey = p.y / (sk.body_radii.y - margin);
        if (ex * ex + ey * ey > 1.0) continue;
        bool clear = true;
        for (const auto& b : bones)
          if (pd::shape_clearance(b.shape, p) < margin) {
            clear = false;
            break;
          }
        for (const auto& t : cfg.tumours)
          if (clear && norm(p - t.center) < r + t.radius_mm + 6.0) clear = false;
        for (const auto& dl : distractors)
          if (clear && norm(p - dl.center) < r + dl.radius + 4.0) clear = false;
        if (clear) {
          distractors.push_back({p, r});
          placed = true;
        }
      }
      if (!placed)
        throw generation_error("phantom: could not place distractor " + std::to_string(i + 1) +
                               " clear of the skeleton and lesions");
    }
  }

  GeneratedStudy study;
  study.dir = out_dir;
  study.true_transforms = transforms;
  study.manifest.patient_id = patient_id;

  const BoneLabelMap bone_map = BoneLabelMap::default_map();
  study.bone_map_path = out_dir / "bone_map.json";
  {
    std::ofstream f(study.bone_map_path, std::ios::trunc);
    f << bone_map.to_json().dump(2) << "\n";
  }

  for (int tp = 0; tp < cfg.n_time_points; ++tp) {
    const RigidTransform& to_world = transforms[tp];
    const RigidTransform to_atlas = to_world.inverse();

    // Bone labels.
    Volume labels(cfg.dims, cfg.spacing, origin, ElementKind::LABEL_UINT);
    for (const auto& b : bones)
      std::visit(
          [&](const auto& shape) {
            pd::rasterize(shape, to_world, to_atlas, grid_proto,
                          [&](int x, int y, int z) { labels.at(x, y, z) = static_cast<float>(b.label); });
          },
          b.shape);

    // Ground-truth tumour masks, checked against the skeleton.
    std::vector<Volume> masks;
    for (const auto& t : cfg.tumours) {
      const double scale = t.scales.empty() ? 1.0 : t.scales[static_cast<std::size_t>(tp)];
      Volume mask(cfg.dims, cfg.spacing, origin, ElementKind::LABEL_UINT);
      if (scale > 0.0) {
        const pd::Ellipsoid sphere{t.center, {t.radius_mm * scale, t.radius_mm * scale, t.radius_mm * scale}};
        pd::rasterize(sphere, to_world, to_atlas, grid_proto, [&](int x, int y, int z) {
          if (labels.at(x, y, z) != 0.0f)
            throw generation_error("phantom: tumour \"" + t.id + "\" overlaps a bone primitive");
          mask.at(x, y, z) = 1.0f;
        });
      }
      masks.push_back(std::move(mask));
    }

    // HU image: background, body, bones, lesions, then noise, quantized so
    // the in-memory volume matches its int16 file exactly.
    Volume image(cfg.dims, cfg.spacing, origin, ElementKind::HU_INT);
    const SkeletonLayout& sk = cfg.skeleton;
    {
      std::size_t i = 0;
      const Index3 d = cfg.dims;
      for (int z = 0; z < d.z; ++z)
        for (int y = 0; y < d.y; ++y)
          for (int x = 0; x < d.x; ++x, ++i) {
            const Vec3 w{origin.x + x * cfg.spacing.x, origin.y + y * cfg.spacing.y,
                         origin.z + z * cfg.spacing.z};
            const Vec3 a = to_atlas.apply(w);
            const double ex = a.x / sk.body_radii.x, ey = a.y / sk.body_radii.y;
            const bool in_body = ex * ex + ey * ey <= 1.0 && std::abs(a.z) <= sk.body_half_z;
            image.data()[i] = static_cast<float>(in_body ? cfg.soft_tissue_hu : cfg.background_hu);
          }
    }
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels.data()[i] != 0.0f) image.data()[i] = static_cast<float>(cfg.bone_hu);
    for (std::size_t k = 0; k < cfg.tumours.size(); ++k)
      for (std::size_t i = 0; i < masks[k].size(); ++i)
        if (masks[k].data()[i] != 0.0f) image.data()[i] = static_cast<float>(cfg.tumours[k].hu);
    for (const auto& dl : distractors) {
      const pd::Ellipsoid sphere{dl.center, {dl.radius, dl.radius, dl.radius}};
      pd::rasterize(sphere, to_world, to_atlas, grid_proto, [&](int x, int y, int z) {
        if (labels.at(x, y, z) != 0.0f)
          throw generation_error("phantom: distractor overlaps a bone primitive");
        image.at(x, y, z) = static_cast<float>(cfg.distractors.hu);
      });
    }
    if (cfg.noise_sigma > 0.0) {
      Rng noise = Rng::derive(cfg.seed, 3000 + static_cast<std::uint64_t>(tp));
      for (auto& v : image.data())
        v = static_cast<float>(std::lrint(v + noise.gaussian() * cfg.noise_sigma));
    } else {
      for (auto& v : image.data()) v = static_cast<float>(std::lrint(v));
    }

    // Write the time point.
    char tag[16];
    std::snprintf(tag, sizeof(tag), "t%02d", tp);
    ScanEntry entry;
    entry.scan_id = tag;
    entry.time_index = tp;
    entry.image_path = out_dir / (std::string("image_") + tag + ".nii");
    entry.bone_labels_path = out_dir / (std::string("bones_") + tag + ".nii");
    save_nifti(image, entry.image_path);
    save_nifti(labels, entry.bone_labels_path);
    for (std::size_t k = 0; k < cfg.tumours.size(); ++k) {
      const fs::path p = out_dir / (std::string("gt_") + tag + "_" + cfg.tumours[k].id + ".nii");
      save_nifti(masks[k], p);
      entry.ground_truth_masks[cfg.tumours[k].id] = p;
    }
    study.manifest.scans.push_back(std::move(entry));

    std::vector<Landmark> lms;
    lms.reserve(atlas_landmarks.size());
    for (const Landmark& lm : atlas_landmarks) lms.push_back({lm.id, to_world.apply(lm.pos_mm)});
    study.analytic_landmarks.push_back(std::move(lms));
  }

  study.manifest_path = out_dir / "manifest.json";
  save_manifest(study.manifest, study.manifest_path);

  {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : transforms) arr.push_back(t.to_json());
    std::ofstream f(out_dir / "true_transforms.json", std::ios::trunc);
    f << arr.dump(2) << "\n";
  }
  {
    nlohmann::json per_tp = nlohmann::json::array();
    for (const auto& lms : study.analytic_landmarks) per_tp.push_back(landmarks_to_json(lms));
    std::ofstream f(out_dir / "landmarks_true.json", std::ios::trunc);
    f << per_tp.dump(2) << "\n";
  }
  return study;
}

}  // namespace longiseg
