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

#include <filesystem>

#include "longiseg/phantom.hpp"
#include "longiseg/resample.hpp"

#include "test_util.hpp"

using namespace longiseg;

namespace {

std::vector<Landmark> scan_landmarks(const StudyManifest& m, int tp) {
  const Volume labels = load_volume(m.scans[static_cast<std::size_t>(tp)].bone_labels_path);
  const auto map = BoneLabelMap::default_map();
  return visibility_filter(labels, map, compute_landmarks(labels, map));
}

std::size_t mask_voxels(const std::filesystem::path& p) {
  const Volume v = load_volume(p);
  std::size_t n = 0;
  for (float x : v.data()) n += x != 0.0f;
  return n;
}

}  // namespace

TEST_SUITE("phantom") {

TEST_CASE("default study emits images, labels and masks for every time point") {
  testutil::TempDir tmp("ph-default");
  PhantomConfig cfg;
  cfg.seed = 21;
  const GeneratedStudy study = generate_study(cfg, tmp.path());
  CHECK(study.manifest.scans.size() == 4);
  CHECK(study.true_transforms.size() == 4);
  CHECK(study.analytic_landmarks.size() == 4);
  for (const auto& scan : study.manifest.scans) {
    CHECK(std::filesystem::exists(scan.image_path));
    CHECK(std::filesystem::exists(scan.bone_labels_path));
    REQUIRE(scan.ground_truth_masks.size() == 1);
    CHECK(std::filesystem::exists(scan.ground_truth_masks.begin()->second));
  }
  CHECK(std::filesystem::exists(study.manifest_path));
  CHECK(std::filesystem::exists(study.bone_map_path));
  CHECK(std::filesystem::exists(tmp / "true_transforms.json"));
  CHECK(std::filesystem::exists(tmp / "landmarks_true.json"));

  // The manifest on disk parses back to the same scan set.
  const StudyManifest parsed = load_manifest(study.manifest_path);
  CHECK(parsed.scans.size() == 4);
  CHECK(parsed.patient_id == study.manifest.patient_id);

  // Time 0 is the identity motion.
  CHECK(rotation_angle_between(study.true_transforms[0].R, Mat3::identity()) < 1e-12);
  CHECK(norm(study.true_transforms[0].t) < 1e-12);
}

TEST_CASE("a scale-0 time point has an empty ground-truth mask") {
  testutil::TempDir tmp("ph-gone");
  PhantomConfig cfg;
  cfg.seed = 22;
  cfg.tumours[0].scales = {1.0, 1.0, 1.0, 0.0};
  cfg.distractors.count = 0;
  const GeneratedStudy study = generate_study(cfg, tmp.path());
  CHECK(mask_voxels(study.manifest.scans[0].ground_truth_masks.begin()->second) > 0);
  CHECK(mask_voxels(study.manifest.scans[3].ground_truth_masks.begin()->second) == 0);
}

TEST_CASE("the full skeleton yields exactly 46 visible landmarks") {
  testutil::TempDir tmp("ph-46");
  PhantomConfig cfg;
  cfg.seed = 23;
  cfg.n_time_points = 1;
  cfg.distractors.count = 0;
  const GeneratedStudy study = generate_study(cfg, tmp.path());
  const auto lms = scan_landmarks(study.manifest, 0);
  CHECK(lms.size() == 46);
}

TEST_CASE("cropping the widest rib pair out of view removes exactly its 2 landmarks") {
  testutil::TempDir tmp("ph-crop");
  PhantomConfig cfg;
  cfg.seed = 24;
  cfg.n_time_points = 1;
  cfg.distractors.count = 0;
  cfg.dims.x = 66;  // lateral FOV cut: rib pair 6 reaches the x faces
  const GeneratedStudy study = generate_study(cfg, tmp.path());
  const auto lms = scan_landmarks(study.manifest, 0);
  CHECK(lms.size() == 44);
  for (const auto& lm : lms) {
    CHECK(lm.id != LandmarkId{LandmarkId::Kind::RIB_LATERAL, Side::LEFT, 6});
    CHECK(lm.id != LandmarkId{LandmarkId::Kind::RIB_LATERAL, Side::RIGHT, 6});
  }
}

TEST_CASE("identity body transforms give identical landmark sets across time") {
  testutil::TempDir tmp("ph-ident");
  PhantomConfig cfg;
  cfg.seed = 25;
  cfg.n_time_points = 3;
  cfg.transforms = std::vector<RigidTransform>(3);  // all identity
  cfg.distractors.count = 0;
  const GeneratedStudy study = generate_study(cfg, tmp.path());
  const auto l0 = scan_landmarks(study.manifest, 0);
  for (int tp = 1; tp < 3; ++tp) {
    const auto lt = scan_landmarks(study.manifest, tp);
    REQUIRE(lt.size() == l0.size());
    for (std::size_t i = 0; i < l0.size(); ++i) {
      CHECK(lt[i].id == l0[i].id);
      CHECK(norm(lt[i].pos_mm - l0[i].pos_mm) < 1e-9);  // same rasterization exactly
    }
  }
}

TEST_CASE("computed landmarks track the analytic ground truth within a voxel or two") {
  testutil::TempDir tmp("ph-analytic");
  PhantomConfig cfg;
  cfg.seed = 26;
  cfg.n_time_points = 2;
  cfg.distractors.count = 0;
  const GeneratedStudy study = generate_study(cfg, tmp.path());
  for (int tp = 0; tp < 2; ++tp) {
    const auto computed = scan_landmarks(study.manifest, tp);
    const auto& truth = study.analytic_landmarks[static_cast<std::size_t>(tp)];
    REQUIRE(computed.size() == truth.size());
    for (std::size_t i = 0; i < computed.size(); ++i) {
      REQUIRE(computed[i].id == truth[i].id);
      CHECK(norm(computed[i].pos_mm - truth[i].pos_mm) < 4.0);
    }
  }
}

TEST_CASE("rigid fit on generated landmarks recovers the true motion") {
  testutil::TempDir tmp("ph-recover");
  PhantomConfig cfg;
  cfg.seed = 27;
  cfg.noise_sigma = 0.0;
  cfg.distractors.count = 0;
  const GeneratedStudy study = generate_study(cfg, tmp.path());
  const auto l0 = scan_landmarks(study.manifest, 0);
  for (int tp = 1; tp < 4; ++tp) {
    const auto lt = scan_landmarks(study.manifest, tp);
    const RigidTransform fit = fit_rigid(match_landmarks(l0, lt));
    // True pair transform is T_tp (time 0 is identity).
    const RigidTransform& truth = study.true_transforms[static_cast<std::size_t>(tp)];
    CHECK(rad_to_deg(rotation_angle_between(fit.R, truth.R)) < 1.0);
    CHECK(norm(fit.t - truth.t) < 1.5);
    CHECK(fit.rms_residual < 3.0);
  }
}

TEST_CASE("ground-truth volume tracks the cube of the scale factor") {
  testutil::TempDir tmp("ph-scale");
  PhantomConfig cfg;
  cfg.seed = 28;
  cfg.tumours[0].scales = {1.0, 0.8, 0.6, 1.0};
  cfg.distractors.count = 0;
  const GeneratedStudy study = generate_study(cfg, tmp.path());
  const double v0 =
      static_cast<double>(mask_voxels(study.manifest.scans[0].ground_truth_masks.begin()->second));
  const double v1 =
      static_cast<double>(mask_voxels(study.manifest.scans[1].ground_truth_masks.begin()->second));
  const double v2 =
      static_cast<double>(mask_voxels(study.manifest.scans[2].ground_truth_masks.begin()->second));
  CHECK(v1 / v0 == doctest::Approx(0.8 * 0.8 * 0.8).epsilon(0.10));
  CHECK(v2 / v0 == doctest::Approx(0.6 * 0.6 * 0.6).epsilon(0.10));
}

TEST_CASE("generation is deterministic per seed") {
  testutil::TempDir a("ph-det-a"), b("ph-det-b");
  PhantomConfig cfg;
  cfg.seed = 29;
  cfg.n_time_points = 2;
  const GeneratedStudy s1 = generate_study(cfg, a.path());
  const GeneratedStudy s2 = generate_study(cfg, b.path());
  for (int tp = 0; tp < 2; ++tp) {
    const Volume i1 = load_volume(s1.manifest.scans[tp].image_path);
    const Volume i2 = load_volume(s2.manifest.scans[tp].image_path);
    CHECK(i1.data() == i2.data());
  }

  PhantomConfig other = cfg;
  other.seed = 30;
  testutil::TempDir c("ph-det-c");
  const GeneratedStudy s3 = generate_study(other, c.path());
  CHECK(load_volume(s3.manifest.scans[1].image_path).data() !=
        load_volume(s1.manifest.scans[1].image_path).data());
}

TEST_CASE("a tumour placed on the spine is a generation error") {
  testutil::TempDir tmp("ph-overlap");
  PhantomConfig cfg;
  cfg.seed = 31;
  cfg.n_time_points = 1;
  cfg.distractors.count = 0;
  cfg.tumours[0].center = {0, -25, 50};  // inside a vertebra
  CHECK_THROWS_AS(generate_study(cfg, tmp.path()), generation_error);
}

TEST_CASE("config validation rejects out-of-band lesions and bad schedules") {
  PhantomConfig cfg;
  cfg.tumours[0].hu = 500;  // outside the lesion band
  CHECK_THROWS_AS(cfg.validate(), invalid_argument_error);

  PhantomConfig cfg2;
  cfg2.bone_hu = 80;  // inside the lesion band
  CHECK_THROWS_AS(cfg2.validate(), invalid_argument_error);

  PhantomConfig cfg3;
  cfg3.tumours[0].scales = {1.0, 1.0};  // wrong length for 4 time points
  CHECK_THROWS_AS(cfg3.validate(), invalid_argument_error);

  PhantomConfig cfg4;
  cfg4.tumours[0].scales = {1.0, -0.5, 1.0, 1.0};
  CHECK_THROWS_AS(cfg4.validate(), invalid_argument_error);
}

TEST_CASE("phantom config JSON round-trips") {
  PhantomConfig cfg;
  cfg.seed = 77;
  cfg.max_rotation_deg = 5;
  cfg.tumours[0].scales = {1.0, 0.9, 0.8, 0.0};
  cfg.distractors.count = 3;
  const PhantomConfig back = PhantomConfig::from_json(cfg.to_json());
  CHECK(back.seed == cfg.seed);
  CHECK(back.max_rotation_deg == cfg.max_rotation_deg);
  CHECK(back.tumours[0].scales == cfg.tumours[0].scales);
  CHECK(back.distractors.count == 3);
}

}  // TEST_SUITE
