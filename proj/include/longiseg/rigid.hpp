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
#include <cmath>
#include <span>
#include <vector>

#include "longiseg/error.hpp"
#include "longiseg/geometry.hpp"
#include "longiseg/landmarks.hpp"

#include <json.hpp>

namespace longiseg {

namespace detail {

/// Eigendecomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in `vals` and eigenvectors as the columns of `vecs`,
/// sorted by descending eigenvalue.
inline void eigen_sym3(const Mat3& a_in, Vec3& vals, Mat3& vecs) {
  Mat3 a = a_in;
  Mat3 q = Mat3::identity();

  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double diag = a(0, 0) * a(0, 0) + a(1, 1) * a(1, 1) + a(2, 2) * a(2, 2);
    if (off <= 1e-30 * (diag + 1e-300)) break;

    static constexpr int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (auto [p, r] : pairs) {
      if (a(p, r) == 0.0) continue;
      const double theta = (a(r, r) - a(p, p)) / (2.0 * a(p, r));
      const double t = (theta >= 0 ? 1.0 : -1.0) /
                       (std::abs(theta) + std::sqrt(theta * theta + 1.0));
      const double c = 1.0 / std::sqrt(t * t + 1.0);
      const double s = t * c;

      // A <- JᵀAJ for the Givens rotation J in plane (p, r).
      Mat3 an = a;
      for (int k = 0; k < 3; ++k) {
        an(p, k) = c * a(p, k) - s * a(r, k);
        an(r, k) = s * a(p, k) + c * a(r, k);
      }
      Mat3 an2 = an;
      for (int k = 0; k < 3; ++k) {
        an2(k, p) = c * an(k, p) - s * an(k, r);
        an2(k, r) = s * an(k, p) + c * an(k, r);
      }
      a = an2;
      Mat3 qn = q;
      for (int k = 0; k < 3; ++k) {
        qn(k, p) = c * q(k, p) - s * q(k, r);
        qn(k, r) = s * q(k, p) + c * q(k, r);
      }
      q = qn;
    }
  }

  int order[3] = {0, 1, 2};
  const double d[3] = {a(0, 0), a(1, 1), a(2, 2)};
  std::sort(order, order + 3, [&](int i, int j) { return d[i] > d[j]; });
  vals = {d[order[0]], d[order[1]], d[order[2]]};
  Mat3 sorted;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) sorted(r, c) = q(r, order[c]);
  vecs = sorted;
}

inline Vec3 column(const Mat3& m, int c) { return {m(0, c), m(1, c), m(2, c)}; }
inline void set_column(Mat3& m, int c, Vec3 v) {
  m(0, c) = v.x;
  m(1, c) = v.y;
  m(2, c) = v.z;
}

/// SVD of a 3x3 matrix: H = U diag(sigma) Vᵀ with sigma descending and
/// non-negative. Built from the eigendecomposition of HᵀH, so singular
/// values below sigma_max * sqrt(eps) are numerically indistinguishable
/// from zero; their left vectors are completed orthonormally instead of
/// being divided out.
inline void svd3(const Mat3& h, Mat3& u, Vec3& sigma, Mat3& v) {
  Vec3 lambda;
  eigen_sym3(h.transposed() * h, lambda, v);
  sigma = {std::sqrt(std::max(lambda.x, 0.0)), std::sqrt(std::max(lambda.y, 0.0)),
           std::sqrt(std::max(lambda.z, 0.0))};

  const double tol = sigma.x * 1e-7 + 1e-300;
  Vec3 cols[3];
  bool ok[3] = {};
  for (int i = 0; i < 3; ++i) {
    if (sigma[i] > tol) {
      cols[i] = (h * column(v, i)) / sigma[i];
      ok[i] = true;
    }
  }

  if (!ok[0]) {  // H is numerically zero
    u = Mat3::identity();
    return;
  }
  cols[0] = cols[0] / norm(cols[0]);

  if (ok[1]) {
    cols[1] = cols[1] - cols[0] * dot(cols[1], cols[0]);
    const double n1 = norm(cols[1]);
    if (n1 > 1e-7) cols[1] = cols[1] / n1;
    else ok[1] = false;
  }
  if (!ok[1]) {
    const Vec3 seed = std::abs(cols[0].x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    cols[1] = cross(cols[0], seed);
    cols[1] = cols[1] / norm(cols[1]);
  }

  if (ok[2]) {
    cols[2] = cols[2] - cols[0] * dot(cols[2], cols[0]) - cols[1] * dot(cols[2], cols[1]);
    const double n2 = norm(cols[2]);
    if (n2 > 1e-7) cols[2] = cols[2] / n2;
    else ok[2] = false;
  }
  if (!ok[2]) cols[2] = cross(cols[0], cols[1]);

  for (int i = 0; i < 3; ++i) set_column(u, i, cols[i]);
}

}  // namespace detail

/// Proper rigid map p -> R p + t between two world frames (millimetres),
/// with the fit quality it was estimated at.
struct RigidTransform {
  Mat3 R = Mat3::identity();
  Vec3 t{};
  double rms_residual = 0.0;
  int n_pairs = 0;
  // Set when the optimal alignment was a reflection on full-rank geometry;
  // the det fix was applied but the data disagrees with a rigid model.
  bool quality_warning = false;

  Vec3 apply(Vec3 p) const { return R * p + t; }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.R = R.transposed();
    inv.t = (inv.R * t) * -1.0;
    inv.rms_residual = rms_residual;
    inv.n_pairs = n_pairs;
    inv.quality_warning = quality_warning;
    return inv;
  }

  /// this ∘ other: apply `other` first.
  RigidTransform compose(const RigidTransform& other) const {
    RigidTransform out;
    out.R = R * other.R;
    out.t = R * other.t + t;
    return out;
  }

  bool is_rotation(double tol = 1e-9) const {
    const Mat3 g = R.transposed() * R;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (std::abs(g(i, j) - (i == j ? 1.0 : 0.0)) > tol) return false;
    return std::abs(R.det() - 1.0) <= tol;
  }

  nlohmann::json to_json() const {
    return {{"R", std::vector<double>(R.m.begin(), R.m.end())},
            {"t", {t.x, t.y, t.z}},
            {"rms_residual", rms_residual},
            {"n_pairs", n_pairs},
            {"quality_warning", quality_warning}};
  }

  static RigidTransform from_json(const nlohmann::json& j) {
    for (const char* k : {"R", "t", "rms_residual", "n_pairs"})
      if (!j.contains(k)) throw format_error(std::string("transform: missing field \"") + k + "\"");
    if (!j.at("R").is_array() || j.at("R").size() != 9)
      throw format_error("transform: \"R\" must hold 9 row-major reals");
    if (!j.at("t").is_array() || j.at("t").size() != 3)
      throw format_error("transform: \"t\" must hold 3 reals");
    RigidTransform out;
    for (int i = 0; i < 9; ++i) out.R.m[i] = j.at("R")[i].get<double>();
    out.t = {j.at("t")[0].get<double>(), j.at("t")[1].get<double>(), j.at("t")[2].get<double>()};
    out.rms_residual = j.at("rms_residual").get<double>();
    out.n_pairs = j.at("n_pairs").get<int>();
    out.quality_warning = j.value("quality_warning", false);
    if (!out.is_rotation(1e-6)) throw format_error("transform: R is not a proper rotation");
    return out;
  }
};

/// One matched landmark: the same anatomical point seen in both scans.
struct PointCorrespondence {
  LandmarkId id;
  Vec3 src;
  Vec3 dst;
};

namespace detail {

/// Singular values of the centered source points; used for the collinearity
/// gate. Throws when no unique rigid fit exists.
inline void check_geometry(std::span<const PointCorrespondence> pairs) {
  Vec3 c{};
  for (const auto& p : pairs) c += p.src;
  c = c / static_cast<double>(pairs.size());
  Mat3 scatter = Mat3::zero();
  for (const auto& p : pairs) {
    const Vec3 d = p.src - c;
    scatter = scatter + outer(d, d);
  }
  Vec3 lambda;
  Mat3 vecs;
  eigen_sym3(scatter, lambda, vecs);
  const double s0 = std::sqrt(std::max(lambda.x, 0.0));
  const double s1 = std::sqrt(std::max(lambda.y, 0.0));
  const double s2 = std::sqrt(std::max(lambda.z, 0.0));
  if (s0 <= 1e-12 || (s1 < 1e-6 * s0 && s2 < 1e-6 * s0))
    throw degenerate_geometry_error(
        "landmarks are collinear; the rotation about their axis is unconstrained");
}

}  // namespace detail

/// Pair up the landmarks present in both sets, ordered canonically by id.
/// Throws insufficient_landmarks_error below 3 common ids and
/// degenerate_geometry_error when the common points are collinear.
inline std::vector<PointCorrespondence> match_landmarks(const std::vector<Landmark>& src,
                                                        const std::vector<Landmark>& dst) {
  std::map<LandmarkId, Vec3> by_id;
  for (const auto& lm : src)
    if (!by_id.emplace(lm.id, lm.pos_mm).second)
      throw invalid_argument_error("match_landmarks: duplicate id " + lm.id.str() + " in source set");
  std::map<LandmarkId, Vec3> dst_by_id;
  for (const auto& lm : dst)
    if (!dst_by_id.emplace(lm.id, lm.pos_mm).second)
      throw invalid_argument_error("match_landmarks: duplicate id " + lm.id.str() +
                                   " in destination set");

  std::vector<PointCorrespondence> pairs;
  for (const auto& [id, p] : by_id) {
    auto it = dst_by_id.find(id);
    if (it != dst_by_id.end()) pairs.push_back({id, p, it->second});
  }
  if (pairs.size() < 3)
    throw insufficient_landmarks_error("only " + std::to_string(pairs.size()) +
                                       " common landmarks; need at least 3");
  detail::check_geometry(pairs);
  return pairs;
}

/// Least-squares rigid fit over matched points: centroids are subtracted,
/// the cross-covariance H = Σ p qᵀ is decomposed by SVD, R = V Uᵀ with the
/// standard determinant fix, and t re-aligns the centroids. Minimizes
/// Σ ‖R p + t − q‖².
inline RigidTransform fit_rigid(std::span<const PointCorrespondence> pairs) {
  const std::size_t n = pairs.size();
  if (n < 3)
    throw insufficient_landmarks_error("rigid fit needs at least 3 pairs, got " + std::to_string(n));
  detail::check_geometry(pairs);

  Vec3 cs{}, cd{};
  for (const auto& p : pairs) {
    cs += p.src;
    cd += p.dst;
  }
  cs = cs / static_cast<double>(n);
  cd = cd / static_cast<double>(n);

  Mat3 h = Mat3::zero();
  for (const auto& p : pairs) h = h + outer(p.src - cs, p.dst - cd);

  Mat3 u, v;
  Vec3 sigma;
  detail::svd3(h, u, sigma, v);

  RigidTransform out;
  out.R = v * u.transposed();
  if (out.R.det() < 0.0) {
    // Reflection: negate V's column for the smallest singular value. When
    // that value is clearly nonzero the data itself prefers a reflection;
    // keep the proper rotation but flag it.
    if (sigma.z > 1e-6 * std::max(sigma.x, 1e-300)) out.quality_warning = true;
    detail::set_column(v, 2, detail::column(v, 2) * -1.0);
    out.R = v * u.transposed();
  }
  out.t = cd - out.R * cs;
  out.n_pairs = static_cast<int>(n);

  double ss = 0.0;
  for (const auto& p : pairs) ss += norm2(out.R * p.src + out.t - p.dst);
  out.rms_residual = std::sqrt(ss / static_cast<double>(n));
  return out;
}

inline RigidTransform fit_rigid(const std::vector<PointCorrespondence>& pairs) {
  return fit_rigid(std::span<const PointCorrespondence>(pairs));
}

/// Free-function form of RigidTransform::apply.
inline Vec3 apply(const RigidTransform& T, Vec3 p) { return T.apply(p); }

}  // namespace longiseg
