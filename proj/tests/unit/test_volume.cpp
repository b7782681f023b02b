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
#include <cmath>
#include <set>

#include "longiseg/resample.hpp"
#include "longiseg/rng.hpp"
#include "longiseg/volume.hpp"

using namespace longiseg;

namespace {

Volume random_volume(Rng& rng, ElementKind kind, Index3 dims, Vec3 spacing) {
  Volume v(dims, spacing, {rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)}, kind);
  for (auto& x : v.data()) {
    switch (kind) {
      case ElementKind::HU_INT: x = static_cast<float>(static_cast<int>(rng.next_below(2000)) - 1000); break;
      case ElementKind::PROB_FLOAT: x = static_cast<float>(rng.next_double()); break;
      case ElementKind::LABEL_UINT: x = static_cast<float>(rng.next_below(5)); break;
    }
  }
  return v;
}

}  // namespace

TEST_SUITE("volume") {

TEST_CASE("construction validates geometry and payload size") {
  CHECK_THROWS_AS(Volume({0, 4, 4}, {1, 1, 1}, {}, ElementKind::HU_INT), invalid_argument_error);
  CHECK_THROWS_AS(Volume({4, 4, 4}, {1, -1, 1}, {}, ElementKind::HU_INT), invalid_argument_error);
  CHECK_THROWS_AS(Volume({2, 2, 2}, {1, 1, 1}, {}, ElementKind::HU_INT, std::vector<float>(7)),
                  invalid_argument_error);
  Volume v({2, 3, 4}, {1, 1, 1}, {}, ElementKind::HU_INT);
  CHECK(v.size() == 24);
}

TEST_CASE("world_from_index is origin + index * spacing") {
  Volume v({8, 8, 8}, {1.5, 1.5, 2.0}, {0, 0, 0}, ElementKind::HU_INT);
  CHECK(world_from_index(v, {0, 0, 0}) == Vec3{0, 0, 0});

  Volume w({8, 8, 8}, {1.5, 1.5, 2.0}, {10, 0, 0}, ElementKind::HU_INT);
  const Vec3 p = world_from_index(w, {2, 0, 1});
  CHECK(p.x == doctest::Approx(13.0));
  CHECK(p.y == doctest::Approx(0.0));
  CHECK(p.z == doctest::Approx(2.0));
}

TEST_CASE("index_from_world inverts world_from_index on the grid") {
  Volume v({6, 7, 8}, {1.5, 1.5, 2.0}, {-20, 5, 3}, ElementKind::HU_INT);
  for (int z = 0; z < 8; ++z)
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 6; ++x) {
        const Index3 c{x, y, z};
        CHECK(index_from_world(v, world_from_index(v, c)) == c);
      }
  CHECK_THROWS_AS(index_from_world(v, {1000, 0, 0}), out_of_bounds_error);
  CHECK_THROWS_AS(index_from_world(v, {-21.0, 5, 3}), out_of_bounds_error);
}

TEST_CASE("index_from_world rounds half away from zero") {
  Volume v({10, 10, 10}, {1, 1, 1}, {0, 0, 0}, ElementKind::HU_INT);
  CHECK(index_from_world(v, {2.5, 0, 0}).x == 3);
  CHECK(index_from_world(v, {2.49, 0, 0}).x == 2);
}

TEST_CASE("resample identity keeps the data array") {
  Rng rng(7);
  Volume v = random_volume(rng, ElementKind::HU_INT, {5, 6, 7}, {1.5, 1.5, 2.0});
  Volume out = resample_to_standard(v, {1.5, 1.5, 2.0}, Interp::TRILINEAR);
  CHECK(out.dims() == v.dims());
  CHECK(out.data() == v.data());
}

TEST_CASE("resample output dims follow ceil(dims*spacing/target)") {
  Volume v({4, 4, 4}, {3, 3, 4}, {0, 0, 0}, ElementKind::HU_INT);
  Volume out = resample_to_standard(v, {1.5, 1.5, 2.0}, Interp::TRILINEAR);
  CHECK(out.dims() == Index3{8, 8, 8});
  CHECK(out.spacing() == Vec3{1.5, 1.5, 2.0});
  CHECK(out.origin() == v.origin());
}

TEST_CASE("trilinear hits the hand-computed midpoint of a ramp") {
  // Two samples 0 and 10 along x at spacing 3; the sample halfway between
  // them must interpolate to 5.
  Volume v({2, 1, 1}, {3, 3, 3}, {0, 0, 0}, ElementKind::HU_INT, {0.0f, 10.0f});
  Volume out = resample_to_standard(v, {1.5, 3, 3}, Interp::TRILINEAR);
  REQUIRE(out.dims().x == 4);
  CHECK(out.at(0, 0, 0) == doctest::Approx(0.0));
  CHECK(out.at(1, 0, 0) == doctest::Approx(5.0));
  CHECK(out.at(2, 0, 0) == doctest::Approx(10.0));
}

TEST_CASE("resample rejects bad arguments") {
  Volume hu({4, 4, 4}, {1, 1, 1}, {}, ElementKind::HU_INT);
  Volume lab({4, 4, 4}, {1, 1, 1}, {}, ElementKind::LABEL_UINT);
  CHECK_THROWS_AS(resample_to_standard(hu, {0, 1, 1}, Interp::TRILINEAR), invalid_argument_error);
  CHECK_THROWS_AS(resample_to_standard(hu, {1, 1, 1}, Interp::NEAREST), invalid_argument_error);
  CHECK_THROWS_AS(resample_to_standard(lab, {1, 1, 1}, Interp::TRILINEAR), invalid_argument_error);
}

TEST_CASE("constant volumes stay constant under resampling") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const Index3 dims{2 + static_cast<int>(rng.next_below(12)),
                      2 + static_cast<int>(rng.next_below(12)),
                      2 + static_cast<int>(rng.next_below(12))};
    const Vec3 spacing{rng.uniform(0.5, 5.0), rng.uniform(0.5, 5.0), rng.uniform(0.5, 5.0)};
    const Vec3 target{rng.uniform(0.5, 5.0), rng.uniform(0.5, 5.0), rng.uniform(0.5, 5.0)};
    const float value = static_cast<float>(static_cast<int>(rng.next_below(2000)) - 1000);
    Volume v(dims, spacing, {}, ElementKind::HU_INT);
    for (auto& x : v.data()) x = value;
    const Volume out = resample_to_standard(v, target, Interp::TRILINEAR);
    for (float x : out.data()) CHECK(x == value);
  }
}

TEST_CASE("nearest resampling of labels invents no labels") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Index3 dims{3 + static_cast<int>(rng.next_below(10)),
                      3 + static_cast<int>(rng.next_below(10)),
                      3 + static_cast<int>(rng.next_below(10))};
    const Vec3 spacing{rng.uniform(1.0, 3.0), rng.uniform(1.0, 3.0), rng.uniform(1.0, 3.0)};
    Volume v = random_volume(rng, ElementKind::LABEL_UINT, dims, spacing);
    const std::set<float> input_labels(v.data().begin(), v.data().end());
    const Volume out = resample_to_standard(v, {1.5, 1.5, 2.0}, Interp::NEAREST);
    for (float x : out.data()) CHECK(input_labels.count(x) == 1);
  }
}

TEST_CASE("trilinear resampling commutes with affine intensity scaling") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Index3 dims{6, 5, 7};
    const Vec3 spacing{rng.uniform(1.0, 2.5), rng.uniform(1.0, 2.5), rng.uniform(1.5, 3.0)};
    Volume v = random_volume(rng, ElementKind::HU_INT, dims, spacing);
    const double a = rng.uniform(0.5, 2.0), b = rng.uniform(-100, 100);

    Volume scaled = v;
    for (auto& x : scaled.data()) x = static_cast<float>(a * x + b);
    const Volume r1 = resample_to_standard(scaled, {1.5, 1.5, 2.0}, Interp::TRILINEAR);
    Volume r2 = resample_to_standard(v, {1.5, 1.5, 2.0}, Interp::TRILINEAR);
    for (auto& x : r2.data()) x = static_cast<float>(a * x + b);

    for (std::size_t i = 0; i < r1.size(); ++i)
      CHECK(r1.data()[i] == doctest::Approx(r2.data()[i]).epsilon(1e-5));
  }
}

TEST_CASE("sampling beyond the physical extent takes the padding value") {
  // The sampling layer pads genuinely out-of-field positions: air for HU,
  // background for labels and probabilities. (resample_to_standard never
  // leaves the field; its grid covers the input extent by construction.)
  Volume hu({2, 1, 1}, {5, 5, 5}, {0, 0, 0}, ElementKind::HU_INT, {100.0f, 100.0f});
  CHECK(detail::sample_trilinear(hu, 1.2, 0, 0) == 100.0f);   // inside
  CHECK(detail::sample_trilinear(hu, 1.49, 0, 0) == 100.0f);  // border clamps
  CHECK(detail::sample_trilinear(hu, 1.6, 0, 0) == -1024.0f); // out of field
  CHECK(detail::sample_trilinear(hu, -0.7, 0, 0) == -1024.0f);

  Volume lab({2, 1, 1}, {5, 5, 5}, {0, 0, 0}, ElementKind::LABEL_UINT, {3.0f, 3.0f});
  CHECK(detail::sample_nearest(lab, 1.6, 0, 0) == 0.0f);
  CHECK(detail::sample_nearest(lab, 1.2, 0, 0) == 3.0f);

  Volume prob({2, 1, 1}, {5, 5, 5}, {0, 0, 0}, ElementKind::PROB_FLOAT, {0.8f, 0.8f});
  CHECK(detail::sample_trilinear(prob, 1.6, 0, 0) == 0.0f);
}

TEST_CASE("content_hash differs across payloads and grids") {
  Volume a({2, 2, 2}, {1, 1, 1}, {}, ElementKind::HU_INT);
  Volume b = a;
  b.at(0, 0, 0) = 5.0f;
  CHECK(content_hash(a) != content_hash(b));
  Volume c({2, 2, 2}, {1, 1, 2}, {}, ElementKind::HU_INT);
  CHECK(content_hash(a) != content_hash(c));
}

}  // TEST_SUITE
