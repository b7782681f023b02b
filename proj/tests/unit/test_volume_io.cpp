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

#include <cstring>
#include <fstream>

#include "longiseg/rng.hpp"
#include "longiseg/volume_io.hpp"

#include "test_util.hpp"

using namespace longiseg;

namespace {

Volume sample_volume(ElementKind kind, std::uint64_t seed) {
  Rng rng(seed);
  Volume v({3, 4, 5}, {1.5, 1.5, 2.0}, {-10.5, 3.0, 7.5}, kind);
  for (auto& x : v.data()) {
    switch (kind) {
      case ElementKind::HU_INT: x = static_cast<float>(static_cast<int>(rng.next_below(3000)) - 1024); break;
      case ElementKind::PROB_FLOAT: x = static_cast<float>(rng.next_double()); break;
      case ElementKind::LABEL_UINT: x = static_cast<float>(rng.next_below(44)); break;
    }
  }
  return v;
}

void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_SUITE("volume_io") {

TEST_CASE("nifti round-trip is bit-exact for all element kinds") {
  testutil::TempDir tmp("nifti");
  int i = 0;
  for (ElementKind kind : {ElementKind::HU_INT, ElementKind::PROB_FLOAT, ElementKind::LABEL_UINT}) {
    const Volume v = sample_volume(kind, 100 + i);
    const auto path = tmp / ("vol" + std::to_string(i++) + ".nii");
    save_volume(v, path);
    const Volume r = load_volume(path);
    CHECK(r.kind() == v.kind());
    CHECK(r.dims() == v.dims());
    CHECK(r.data() == v.data());
    CHECK(r.spacing().x == doctest::Approx(v.spacing().x));
    CHECK(r.origin().x == doctest::Approx(v.origin().x));
    CHECK(r.origin().z == doctest::Approx(v.origin().z));
  }
}

TEST_CASE("gzipped nifti round-trips through the same path") {
  testutil::TempDir tmp("niigz");
  const Volume v = sample_volume(ElementKind::HU_INT, 7);
  const auto path = tmp / "vol.nii.gz";
  save_volume(v, path);
  // Must really be a gzip stream, not a plain file with a fancy name.
  std::ifstream f(path, std::ios::binary);
  unsigned char magic[2];
  f.read(reinterpret_cast<char*>(magic), 2);
  CHECK(magic[0] == 0x1f);
  CHECK(magic[1] == 0x8b);
  const Volume r = load_volume(path);
  CHECK(r.data() == v.data());
}

TEST_CASE("wrong magic bytes are a format error") {
  testutil::TempDir tmp("badmagic");
  auto bytes = serialize_nifti(sample_volume(ElementKind::HU_INT, 8));
  std::memcpy(bytes.data() + 344, "ni1", 4);  // two-file variant, unsupported
  const auto path = tmp / "bad.nii";
  write_bytes(path, bytes);
  CHECK_THROWS_WITH_AS(load_volume(path), doctest::Contains("magic"), format_error);
}

TEST_CASE("unsupported datatype and truncated payload are format errors") {
  testutil::TempDir tmp("badnifti");
  const auto bytes = serialize_nifti(sample_volume(ElementKind::HU_INT, 9));

  auto dt = bytes;
  const std::int16_t bad_dtype = 64;  // float64, outside the subset
  std::memcpy(dt.data() + 70, &bad_dtype, 2);
  write_bytes(tmp / "dtype.nii", dt);
  CHECK_THROWS_WITH_AS(load_volume(tmp / "dtype.nii"), doctest::Contains("datatype"), format_error);

  auto trunc = bytes;
  trunc.resize(trunc.size() - 10);
  write_bytes(tmp / "trunc.nii", trunc);
  CHECK_THROWS_WITH_AS(load_volume(tmp / "trunc.nii"), doctest::Contains("truncated"), format_error);
}

TEST_CASE("non-axis-aligned sform is rejected") {
  testutil::TempDir tmp("oblique");
  auto bytes = serialize_nifti(sample_volume(ElementKind::HU_INT, 10));
  // srow_x[1] lives at offset 280 + 4.
  const float shear = 0.4f;
  std::memcpy(bytes.data() + 284, &shear, 4);
  write_bytes(tmp / "oblique.nii", bytes);
  CHECK_THROWS_WITH_AS(load_volume(tmp / "oblique.nii"), doctest::Contains("axis-aligned"),
                       format_error);
}

TEST_CASE("flipped sform diagonal is rejected") {
  testutil::TempDir tmp("flip");
  auto bytes = serialize_nifti(sample_volume(ElementKind::HU_INT, 12));
  const float neg = -1.5f;  // srow_x[0] at offset 280
  std::memcpy(bytes.data() + 280, &neg, 4);
  write_bytes(tmp / "flip.nii", bytes);
  CHECK_THROWS_AS(load_volume(tmp / "flip.nii"), format_error);
}

TEST_CASE("big-endian files are named in the error") {
  testutil::TempDir tmp("be");
  std::vector<unsigned char> bytes(352, 0);
  bytes[2] = 0x01;  // 348 = 0x0000015C as big-endian int32
  bytes[3] = 0x5C;
  std::memcpy(bytes.data() + 344, "n+1", 4);
  write_bytes(tmp / "be.nii", bytes);
  CHECK_THROWS_WITH_AS(load_volume(tmp / "be.nii"), doctest::Contains("big-endian"), format_error);
}

TEST_CASE("raw/json sidecar round-trips and validates") {
  testutil::TempDir tmp("sidecar");
  const Volume v = sample_volume(ElementKind::PROB_FLOAT, 11);
  const auto path = tmp / "vol.json";
  save_volume(v, path);
  const Volume r = load_volume(path);
  CHECK(r.data() == v.data());
  CHECK(r.kind() == v.kind());

  // dims product not matching the payload must name the field.
  nlohmann::json j;
  {
    std::ifstream f(path);
    f >> j;
  }
  j["dims"] = {3, 4, 6};
  {
    std::ofstream f(path, std::ios::trunc);
    f << j.dump();
  }
  CHECK_THROWS_WITH_AS(load_volume(path), doctest::Contains("data_file length"), format_error);

  j["dims"] = {3, 4, 5};
  j.erase("spacing");
  {
    std::ofstream f(path, std::ios::trunc);
    f << j.dump();
  }
  CHECK_THROWS_WITH_AS(load_volume(path), doctest::Contains("spacing"), format_error);
}

TEST_CASE("probability values outside [0,1] fail validation at load") {
  testutil::TempDir tmp("probrange");
  Volume v({2, 2, 2}, {1, 1, 1}, {}, ElementKind::PROB_FLOAT);
  v.data()[3] = 1.5f;
  const auto path = tmp / "p.nii";
  write_bytes(path, serialize_nifti(v));
  CHECK_THROWS_AS(load_volume(path), format_error);
}

TEST_CASE("unsupported extension is an error") {
  CHECK_THROWS_AS(load_volume("/nonexistent/file.dcm"), format_error);
}

}  // TEST_SUITE
