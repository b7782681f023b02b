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

#include <cmath>

#include "longiseg/oracle.hpp"
#include "longiseg/segmenter.hpp"

using namespace longiseg;

namespace {

// A phantom-style scene: soft tissue background with lesion-band spheres.
Volume scene(Index3 dims = {40, 40, 30}, Vec3 spacing = {1.5, 1.5, 2.0}) {
  Volume v(dims, spacing, {0, 0, 0}, ElementKind::HU_INT);
  return v;
}

void add_sphere(Volume& v, Vec3 center, double radius, float hu) {
  const Index3 d = v.dims();
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x) {
        const Vec3 w = world_from_index(v, {x, y, z});
        if (norm(w - center) <= radius) v.at(x, y, z) = hu;
      }
}

Click click_at(Vec3 p) { return {p, "s", "k", std::nullopt}; }

}  // namespace

TEST_SUITE("segmenter") {

TEST_CASE("guidance channel matches the Gaussian at exact voxel offsets") {
  Volume grid = scene({20, 20, 20}, {1, 1, 1});
  const Click c = click_at({10, 10, 10});
  const Volume g = encode_guidance(std::vector<Click>{c}, grid);
  CHECK(g.at(10, 10, 10) == doctest::Approx(1.0));                       // d = 0
  CHECK(g.at(12, 10, 10) == doctest::Approx(std::exp(-0.5)));            // d = 2, sigma = 2
  CHECK(g.at(10, 13, 10) == doctest::Approx(std::exp(-9.0 / 8.0)));      // d = 3
  CHECK(g.at(10, 10, 19) == doctest::Approx(0.0));                       // beyond 4 sigma
  CHECK(g.kind() == ElementKind::PROB_FLOAT);
}

TEST_CASE("empty click list encodes to an all-zero channel") {
  Volume grid = scene();
  const Volume g = encode_guidance(std::vector<Click>{}, grid);
  for (float v : g.data()) CHECK(v == 0.0f);
}

TEST_CASE("clicks outside the grid are out of bounds") {
  Volume grid = scene();
  CHECK_THROWS_AS(encode_guidance(std::vector<Click>{click_at({-500, 0, 0})}, grid),
                  out_of_bounds_error);
}

TEST_CASE("guidance is symmetric under axis permutation of the click set") {
  // Cubic grid; permuting click coordinates must permute the channel.
  Volume grid({24, 24, 24}, {1.5, 1.5, 1.5}, {0, 0, 0}, ElementKind::HU_INT);
  const Vec3 a{7.5, 15.0, 21.0}, b{12.0, 4.5, 9.0};
  const Volume g1 = encode_guidance(std::vector<Click>{click_at(a), click_at(b)}, grid);
  const Vec3 ap{a.y, a.z, a.x}, bp{b.y, b.z, b.x};
  const Volume g2 = encode_guidance(std::vector<Click>{click_at(ap), click_at(bp)}, grid);
  const Index3 d = grid.dims();
  for (int z = 0; z < d.z; ++z)
    for (int y = 0; y < d.y; ++y)
      for (int x = 0; x < d.x; ++x) CHECK(g1.at(x, y, z) == g2.at(y, z, x));
}

TEST_CASE("binarize thresholds strictly and checks its arguments") {
  Volume prob({2, 2, 1}, {1, 1, 1}, {}, ElementKind::PROB_FLOAT,
              {0.0f, 0.5f, 0.500001f, 1.0f});
  const Volume m = binarize(prob, 0.5);
  CHECK(m.data() == std::vector<float>{0, 0, 1, 1});
  CHECK(m.kind() == ElementKind::LABEL_UINT);
  CHECK_THROWS_AS(binarize(prob, 0.0), invalid_argument_error);
  CHECK_THROWS_AS(binarize(prob, 1.0), invalid_argument_error);
  Volume hu = scene();
  CHECK_THROWS_AS(binarize(hu, 0.5), invalid_argument_error);
}

TEST_CASE("all-zero probability binarizes to an empty mask with no components") {
  Volume prob({8, 8, 8}, {1, 1, 1}, {}, ElementKind::PROB_FLOAT);
  const Volume m = binarize(prob, 0.5);
  CHECK(connected_components(m).empty());
}

TEST_CASE("oracle unguided marks every lesion-band component") {
  Volume img = scene();
  add_sphere(img, {15, 15, 15}, 8, 80.0f);   // the tumour
  add_sphere(img, {40, 40, 30}, 6, 80.0f);   // distractor 1
  add_sphere(img, {15, 40, 40}, 5, 80.0f);   // distractor 2
  OracleBackend oracle;
  const Volume prob = oracle.unguided(img);
  const auto comps = connected_components(binarize(prob, 0.5));
  CHECK(comps.size() == 3);
  for (float v : prob.data()) CHECK((v == 0.0f || v == 0.9f));
}

TEST_CASE("oracle guided keeps only clicked components") {
  Volume img = scene();
  add_sphere(img, {15, 15, 15}, 8, 80.0f);
  add_sphere(img, {40, 40, 30}, 6, 80.0f);
  add_sphere(img, {15, 40, 40}, 5, 80.0f);
  OracleBackend oracle;

  const std::vector<Click> clicks{click_at({15, 15, 15})};
  const Volume prob = oracle.guided(img, clicks);
  const auto comps = connected_components(binarize(prob, 0.5));
  REQUIRE(comps.size() == 1);
  const Vec3 center = world_from_index(img, comps[0].bbox_min) +
                      world_from_index(img, comps[0].bbox_max);
  CHECK(center.x / 2 == doctest::Approx(15).epsilon(0.1));
}

TEST_CASE("oracle guided equals unguided for an empty click list, bit-exact") {
  Volume img = scene();
  add_sphere(img, {20, 20, 20}, 7, 80.0f);
  OracleBackend oracle;
  CHECK(oracle.guided(img, {}).data() == oracle.unguided(img).data());
}

TEST_CASE("a near-miss click attaches to a component within 10mm") {
  Volume img = scene();
  add_sphere(img, {20, 20, 20}, 6, 80.0f);
  OracleBackend oracle;
  // ~4.5mm outside the sphere surface.
  const Volume hit = oracle.guided(img, std::vector<Click>{click_at({30.5, 20, 20})});
  CHECK(connected_components(binarize(hit, 0.5)).size() == 1);
  // Far in clean background: empty output.
  const Volume miss = oracle.guided(img, std::vector<Click>{click_at({52, 48, 20})});
  for (float v : miss.data()) CHECK(v == 0.0f);
}

TEST_CASE("oracle determinism and click monotonicity") {
  Volume img = scene();
  add_sphere(img, {15, 15, 15}, 7, 80.0f);
  add_sphere(img, {40, 40, 30}, 6, 80.0f);
  OracleBackend oracle;

  std::vector<Click> clicks{click_at({15, 15, 15})};
  const Volume p1 = oracle.guided(img, clicks);
  const Volume p2 = oracle.guided(img, clicks);
  CHECK(p1.data() == p2.data());

  // Adding a click never removes a previously selected component.
  clicks.push_back(click_at({40, 40, 30}));
  const Volume p3 = oracle.guided(img, clicks);
  for (std::size_t i = 0; i < p1.size(); ++i)
    if (p1.data()[i] > 0.0f) CHECK(p3.data()[i] > 0.0f);
  CHECK(connected_components(binarize(p3, 0.5)).size() == 2);

  // The same holds when the first click was attached by proximity.
  std::vector<Click> near{click_at({26.5, 15, 15})};
  const Volume q1 = oracle.guided(img, near);
  near.push_back(click_at({40, 40, 30}));
  const Volume q2 = oracle.guided(img, near);
  for (std::size_t i = 0; i < q1.size(); ++i)
    if (q1.data()[i] > 0.0f) CHECK(q2.data()[i] > 0.0f);
}

}  // TEST_SUITE
