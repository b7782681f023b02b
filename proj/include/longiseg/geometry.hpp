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

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>

namespace longiseg {

/// A point or direction in world space (millimetres).
struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a * s; }
  friend constexpr Vec3 operator/(Vec3 a, double s) { return {a.x / s, a.y / s, a.z / s}; }
  Vec3& operator+=(Vec3 b) { return *this = *this + b; }
  Vec3& operator-=(Vec3 b) { return *this = *this - b; }
  friend constexpr bool operator==(Vec3, Vec3) = default;
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
constexpr double norm2(Vec3 a) { return dot(a, a); }

/// A voxel index triple. Components are only meaningful relative to a grid.
struct Index3 {
  int x = 0, y = 0, z = 0;

  constexpr int& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr int operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr bool operator==(Index3, Index3) = default;
  friend constexpr auto operator<=>(Index3, Index3) = default;
};

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static constexpr Mat3 identity() { return {}; }
  static constexpr Mat3 zero() { return Mat3{{0, 0, 0, 0, 0, 0, 0, 0, 0}}; }

  constexpr double& operator()(int r, int c) { return m[r * 3 + c]; }
  constexpr double operator()(int r, int c) const { return m[r * 3 + c]; }

  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;

  friend constexpr Vec3 operator*(const Mat3& a, Vec3 v) {
    return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z,
            a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
            a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
  }

  friend constexpr Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r = zero();
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j) r(i, j) += a(i, k) * b(k, j);
    return r;
  }

  friend constexpr Mat3 operator+(const Mat3& a, const Mat3& b) {
    Mat3 r = zero();
    for (int i = 0; i < 9; ++i) r.m[i] = a.m[i] + b.m[i];
    return r;
  }

  friend constexpr Mat3 operator*(const Mat3& a, double s) {
    Mat3 r = a;
    for (auto& v : r.m) v *= s;
    return r;
  }

  constexpr Mat3 transposed() const {
    Mat3 r = zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }

  constexpr double det() const {
    const Mat3& a = *this;
    return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
           a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
           a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  }
};

/// Outer product a * b^T.
constexpr Mat3 outer(Vec3 a, Vec3 b) {
  Mat3 r = Mat3::zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = a[i] * b[j];
  return r;
}

/// Rotation by `angle_rad` about a (normalised internally) axis, Rodrigues form.
inline Mat3 rotation_about_axis(Vec3 axis, double angle_rad) {
  const double len = norm(axis);
  Vec3 u = len > 0 ? axis / len : Vec3{0, 0, 1};
  const double c = std::cos(angle_rad), s = std::sin(angle_rad);
  Mat3 r = Mat3::zero();
  r(0, 0) = c + u.x * u.x * (1 - c);
  r(0, 1) = u.x * u.y * (1 - c) - u.z * s;
  r(0, 2) = u.x * u.z * (1 - c) + u.y * s;
  r(1, 0) = u.y * u.x * (1 - c) + u.z * s;
  r(1, 1) = c + u.y * u.y * (1 - c);
  r(1, 2) = u.y * u.z * (1 - c) - u.x * s;
  r(2, 0) = u.z * u.x * (1 - c) - u.y * s;
  r(2, 1) = u.z * u.y * (1 - c) + u.x * s;
  r(2, 2) = c + u.z * u.z * (1 - c);
  return r;
}

/// Geodesic distance between two rotations, in radians.
inline double rotation_angle_between(const Mat3& a, const Mat3& b) {
  const Mat3 d = a.transposed() * b;
  double tr = d(0, 0) + d(1, 1) + d(2, 2);
  double c = (tr - 1.0) / 2.0;
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c);
}

constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double d) { return d * kPi / 180.0; }
constexpr double rad_to_deg(double r) { return r * 180.0 / kPi; }

}  // namespace longiseg
