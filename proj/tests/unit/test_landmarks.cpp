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

#include <doctest.h>

#include <algorithm>
#include <set>

#include "longiseg/landmarks.hpp"

using namespace longiseg;

namespace {

Volume empty_labels(Index3 dims = {32, 32, 32}, Vec3 spacing = {1.5, 1.5, 2.0},
                    Vec3 origin = {0, 0, 0}) {
  return Volume(dims, spacing, origin, ElementKind::LABEL_UINT);
}

const Landmark* find_id(const std::vector<Landmark>& lms, LandmarkId id) {
  for (const auto& lm : lms)
    if (lm.id == id) return &lm;
  return nullptr;
}

}  // namespace

TEST_SUITE("landmarks") {

TEST_CASE("landmark id strings round-trip and enumerate to 46") {
  CHECK(all_landmark_ids().size() == 46);
  for (const LandmarkId& id : all_landmark_ids()) {
    CHECK(LandmarkId::parse(id.str()) == id);
  }
  CHECK(LandmarkId{LandmarkId::Kind::RIB_LATERAL, Side::RIGHT, 7}.str() == "RIB_LATERAL_R_07");
  CHECK(LandmarkId{LandmarkId::Kind::VERTEBRA_COM, Side::NONE, 13}.str() == "VERTEBRA_COM_L01");
  CHECK_THROWS_AS(LandmarkId::parse("RIB_LATERAL_X_07"), format_error);
  CHECK_THROWS_AS(LandmarkId::parse("nonsense"), format_error);
}

TEST_CASE("single-voxel vertebra lands at its voxel center in mm") {
  Volume labels = empty_labels();
  labels.at(3, 4, 5) = 1.0f;  // label 1 = T1 in the default map
  const auto lms = compute_landmarks(labels, BoneLabelMap::default_map());
  REQUIRE(lms.size() == 1);
  CHECK(lms[0].id == LandmarkId{LandmarkId::Kind::VERTEBRA_COM, Side::NONE, 1});
  CHECK(lms[0].pos_mm.x == doctest::Approx(4.5));
  CHECK(lms[0].pos_mm.y == doctest::Approx(6.0));
  CHECK(lms[0].pos_mm.z == doctest::Approx(10.0));
}

TEST_CASE("rib lateral point is the COM of the outermost sagittal slice") {
  // A left rib spanning x-indices 10..20: lateral slice is x = 20 (max-x for
  // the left side, +x being patient-left). Two voxels at that slice pin the
  // slice COM.
  Volume labels = empty_labels();
  for (int x = 10; x <= 20; ++x) labels.at(x, 8, 8) = 18.0f;  // label 18 = left rib 1
  labels.at(20, 10, 8) = 18.0f;
  const auto lms = compute_landmarks(labels, BoneLabelMap::default_map());
  REQUIRE(lms.size() == 1);
  CHECK(lms[0].id == LandmarkId{LandmarkId::Kind::RIB_LATERAL, Side::LEFT, 1});
  CHECK(lms[0].pos_mm.x == doctest::Approx(20 * 1.5));
  CHECK(lms[0].pos_mm.y == doctest::Approx(9.0 * 1.5));  // mean of y=8,10

  // The mirrored right rib picks the min-x slice instead.
  Volume rlabels = empty_labels();
  for (int x = 10; x <= 20; ++x) rlabels.at(x, 8, 8) = 30.0f;  // label 30 = right rib 1
  const auto rlms = compute_landmarks(rlabels, BoneLabelMap::default_map());
  REQUIRE(rlms.size() == 1);
  CHECK(rlms[0].id == LandmarkId{LandmarkId::Kind::RIB_LATERAL, Side::RIGHT, 1});
  CHECK(rlms[0].pos_mm.x == doctest::Approx(10 * 1.5));
}

TEST_CASE("clavicle yields inner and outer slice centroids") {
  Volume labels = empty_labels();
  for (int x = 5; x <= 15; ++x) labels.at(x, 16, 20) = 42.0f;  // left clavicle
  const auto lms = compute_landmarks(labels, BoneLabelMap::default_map());
  REQUIRE(lms.size() == 2);
  const auto* inner = find_id(lms, {LandmarkId::Kind::CLAVICLE_INNER, Side::LEFT, 0});
  const auto* outer = find_id(lms, {LandmarkId::Kind::CLAVICLE_OUTER, Side::LEFT, 0});
  REQUIRE(inner);
  REQUIRE(outer);
  CHECK(inner->pos_mm.x == doctest::Approx(5 * 1.5));   // medial end: min-x on the left
  CHECK(outer->pos_mm.x == doctest::Approx(15 * 1.5));  // lateral end: max-x on the left
}

TEST_CASE("sternum landmark sits on the most inferior axial slice") {
  Volume labels = empty_labels();
  for (int z = 6; z <= 12; ++z)
    for (int y = 14; y <= 16; ++y) labels.at(16, y, z) = 44.0f;
  const auto lms = compute_landmarks(labels, BoneLabelMap::default_map());
  REQUIRE(lms.size() == 1);
  CHECK(lms[0].id.kind == LandmarkId::Kind::STERNUM_INFERIOR);
  CHECK(lms[0].pos_mm.z == doctest::Approx(6 * 2.0));
  CHECK(lms[0].pos_mm.y == doctest::Approx(15 * 1.5));
}

TEST_CASE("unknown labels are collected, never fatal") {
  Volume labels = empty_labels();
  labels.at(3, 3, 3) = 1.0f;
  labels.at(10, 10, 10) = 99.0f;
  std::vector<int> unknown;
  const auto lms = compute_landmarks(labels, BoneLabelMap::default_map(), &unknown);
  CHECK(lms.size() == 1);
  REQUIRE(unknown.size() == 1);
  CHECK(unknown[0] == 99);
}

TEST_CASE("visibility filter drops bones touching any grid face") {
  Volume labels = empty_labels();
  labels.at(10, 10, 10) = 1.0f;  // interior vertebra
  labels.at(5, 5, 0) = 2.0f;     // vertebra touching the z=0 face
  const auto map = BoneLabelMap::default_map();
  const auto lms = compute_landmarks(labels, map);
  REQUIRE(lms.size() == 2);
  const auto kept = visibility_filter(labels, map, lms);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].id.number == 1);

  // A clavicle touching a face loses both of its landmarks.
  Volume labels2 = empty_labels();
  for (int x = 0; x <= 6; ++x) labels2.at(x, 12, 12) = 42.0f;
  const auto lms2 = compute_landmarks(labels2, map);
  CHECK(lms2.size() == 2);
  CHECK(visibility_filter(labels2, map, lms2).empty());
}

TEST_CASE("per scan each landmark id appears at most once") {
  Volume labels = empty_labels();
  for (int i = 0; i < 17; ++i) labels.at(2 + i, 10, 10) = static_cast<float>(1 + i);
  for (int i = 0; i < 12; ++i) {
    labels.at(2 + i, 14, 14) = static_cast<float>(18 + i);
    labels.at(2 + i, 18, 18) = static_cast<float>(30 + i);
  }
  labels.at(25, 25, 25) = 42.0f;
  labels.at(25, 25, 20) = 43.0f;
  labels.at(25, 25, 15) = 44.0f;
  const auto lms = compute_landmarks(labels, BoneLabelMap::default_map());
  CHECK(lms.size() == 46);
  std::set<std::string> ids;
  for (const auto& lm : lms) CHECK(ids.insert(lm.id.str()).second);
}

TEST_CASE("landmark positions are translation-equivariant in the origin") {
  Volume labels = empty_labels();
  for (int x = 10; x <= 20; ++x) labels.at(x, 8, 8) = 18.0f;
  labels.at(5, 5, 5) = 3.0f;
  const Vec3 delta{12.5, -3.0, 40.0};
  Volume shifted(labels.dims(), labels.spacing(),
                 labels.origin() + delta, ElementKind::LABEL_UINT, labels.data());

  const auto map = BoneLabelMap::default_map();
  const auto a = compute_landmarks(labels, map);
  const auto b = compute_landmarks(shifted, map);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b[i].pos_mm.x == doctest::Approx(a[i].pos_mm.x + delta.x));
    CHECK(b[i].pos_mm.y == doctest::Approx(a[i].pos_mm.y + delta.y));
    CHECK(b[i].pos_mm.z == doctest::Approx(a[i].pos_mm.z + delta.z));
  }
}

TEST_CASE("90-degree grid rotation about x maps axis-compatible landmarks exactly") {
  // Rotating the grid content about +x (y->z, z->-y) is an exact voxel
  // permutation when spacing.y == spacing.z. Sagittal-slice landmarks (ribs,
  // clavicles) and centroids keep their defining axis, so their positions
  // must map by the same rotation. (The sternum's most-inferior-axial-slice
  // anchor does not survive an x rotation and is out of this property's
  // scope.)
  const Vec3 spacing{1.5, 2.0, 2.0};
  const Index3 dims{24, 20, 20};
  Volume labels(dims, spacing, {0, 0, 0}, ElementKind::LABEL_UINT);
  for (int x = 6; x <= 14; ++x) labels.at(x, 8, 11) = 18.0f;   // left rib
  labels.at(14, 9, 11) = 18.0f;
  for (int x = 4; x <= 9; ++x) labels.at(x, 12, 6) = 42.0f;    // left clavicle
  labels.at(10, 5, 9) = 7.0f;                                  // vertebra voxel
  labels.at(10, 6, 9) = 7.0f;

  // B(x, y', z') = A(x, y, z) with y' = dz-1-z, z' = y.
  Volume rotated({dims.x, dims.z, dims.y}, {spacing.x, spacing.z, spacing.y}, {0, 0, 0},
                 ElementKind::LABEL_UINT);
  for (int z = 0; z < dims.z; ++z)
    for (int y = 0; y < dims.y; ++y)
      for (int x = 0; x < dims.x; ++x)
        rotated.at(x, dims.z - 1 - z, y) = labels.at(x, y, z);

  const auto map = BoneLabelMap::default_map();
  const auto a = compute_landmarks(labels, map);
  const auto b = compute_landmarks(rotated, map);
  REQUIRE(a.size() == b.size());
  for (const auto& lm : a) {
    const auto* r = find_id(b, lm.id);
    REQUIRE(r);
    // World map implied by the permutation: (x, y, z) -> (x, Zmax - z, y).
    const double zmax = (dims.z - 1) * spacing.z;
    CHECK(r->pos_mm.x == doctest::Approx(lm.pos_mm.x).epsilon(1e-12));
    CHECK(r->pos_mm.y == doctest::Approx(zmax - lm.pos_mm.z).epsilon(1e-12));
    CHECK(r->pos_mm.z == doctest::Approx(lm.pos_mm.y).epsilon(1e-12));
  }
}

TEST_CASE("landmark sets round-trip through JSON") {
  std::vector<Landmark> lms{{{LandmarkId::Kind::RIB_LATERAL, Side::RIGHT, 7}, {1.5, -2.25, 30}},
                            {{LandmarkId::Kind::STERNUM_INFERIOR, Side::NONE, 0}, {0, 26, 19}}};
  const auto j = landmarks_to_json(lms);
  CHECK(j[0].at("id") == "RIB_LATERAL_R_07");
  const auto back = landmarks_from_json(j);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].id == lms[i].id);
    CHECK(back[i].pos_mm == lms[i].pos_mm);
  }
  CHECK_THROWS_AS(landmarks_from_json(nlohmann::json{{"not", "an array"}}), format_error);
  CHECK_THROWS_AS(landmarks_from_json(nlohmann::json::array({{{"id", "X"}}})), format_error);
}

TEST_CASE("bone label map JSON round-trips and rejects duplicates") {
  const auto map = BoneLabelMap::default_map();
  const auto j = map.to_json();
  const auto parsed = BoneLabelMap::from_json(j);
  CHECK(parsed.labels() == map.labels());

  BoneLabelMap dup;
  dup.add(1, {BoneKind::STERNUM, Side::NONE, 0});
  CHECK_THROWS_AS(dup.add(1, {BoneKind::CLAVICLE, Side::LEFT, 0}), invalid_argument_error);
  CHECK_THROWS_AS(dup.add(2, {BoneKind::STERNUM, Side::NONE, 0}), invalid_argument_error);

  CHECK_THROWS_AS(BoneLabelMap::from_json(nlohmann::json{{"nope", 1}}), format_error);
}

}  // TEST_SUITE
