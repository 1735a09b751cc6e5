// Copyright 2026 The patchshade Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "test_support.h"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

namespace patchshade::testing {

LocalSurfaceFrame RandomFrame(std::mt19937_64& rng, const FrameRanges& ranges) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> curv(-ranges.max_curvature, ranges.max_curvature);
  std::uniform_real_distribution<double> third(-ranges.max_third, ranges.max_third);
  LocalSurfaceFrame fr;
  fr.slant = ranges.max_slant * unit(rng);
  fr.tilt = 2.0 * std::numbers::pi * unit(rng);
  fr.phi = std::numbers::pi * unit(rng);
  fr.kappa1 = curv(rng);
  fr.kappa2 = curv(rng);
  fr.dk1_ds = third(rng);
  fr.dk1_dt = third(rng);
  fr.dk2_ds = third(rng);
  fr.dk2_dt = third(rng);
  return Canonicalize(fr);
}

Vec3 RandomUnit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

Mat3 PrincipalToCamera(const LocalSurfaceFrame& fr) {
  using Eigen::AngleAxisd;
  return (AngleAxisd(fr.tilt, Vec3::UnitZ()) * AngleAxisd(-fr.slant, Vec3::UnitY()) *
          AngleAxisd(fr.phi, Vec3::UnitZ()))
      .toRotationMatrix();
}

namespace {

// Image step -> principal-coordinate step for the linearly posed field.
Mat2 ImageToPrincipal(const Mat3& r) { return r.topLeftCorner<2, 2>().inverse(); }

}  // namespace

Vec3 PosedTaylorNormal(const LocalSurfaceFrame& fr, const Vec2& x) {
  const Mat3 r = PrincipalToCamera(fr);
  const MongePatch patch = TaylorSurface(fr);
  return r * patch.Normal(ImageToPrincipal(r) * x);
}

Vec3 RotatedTaylorNormal(const LocalSurfaceFrame& fr, const Vec2& x) {
  const Mat3 r = PrincipalToCamera(fr);
  const MongePatch patch = TaylorSurface(fr);
  const Mat2 a = r.topLeftCorner<2, 2>();
  const Vec2 b = r.block<2, 1>(0, 2);
  Vec2 u = a.inverse() * x;
  for (int it = 0; it < 50; ++it) {
    const HeightJet jet = patch.Jet(u);
    const Vec2 residual = a * u + b * jet.value - x;
    const Mat2 jac = a + b * jet.gradient.transpose();
    const Vec2 step = jac.inverse() * residual;
    u -= step;
    if (step.norm() < 1e-16) break;
  }
  return r * patch.Normal(u);
}

namespace {

constexpr double kW1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
constexpr double kW2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};

template <typename T, typename F>
T Mixed(const F& field, const Vec2& x, double step, T zero) {
  T acc = zero;
  for (int a = -2; a <= 2; ++a) {
    if (kW1[a + 2] == 0.0) continue;
    for (int b = -2; b <= 2; ++b) {
      if (kW1[b + 2] == 0.0) continue;
      acc += kW1[a + 2] * kW1[b + 2] * field(x + step * Vec2(a, b));
    }
  }
  return acc / (step * step);
}

template <typename T, typename F>
T Axis(const F& field, const Vec2& x, double step, int axis, const double* w, int order, T zero) {
  T acc = zero;
  const Vec2 e = axis == 0 ? Vec2::UnitX() : Vec2::UnitY();
  for (int o = -2; o <= 2; ++o) {
    if (w[o + 2] == 0.0) continue;
    acc += w[o + 2] * field(x + step * o * e);
  }
  return acc / std::pow(step, order);
}

}  // namespace

Mat32 FdJacobian(const VectorField& field, const Vec2& x, double step) {
  Mat32 j;
  for (int k = 0; k < 2; ++k) j.col(k) = Axis<Vec3>(field, x, step, k, kW1, 1, Vec3::Zero());
  return j;
}

Mat34 FdSecond(const VectorField& field, const Vec2& x, double step) {
  Mat34 out;
  out.col(0) = Axis<Vec3>(field, x, step, 0, kW2, 2, Vec3::Zero());
  out.col(3) = Axis<Vec3>(field, x, step, 1, kW2, 2, Vec3::Zero());
  out.col(1) = Mixed<Vec3>(field, x, step, Vec3::Zero());
  out.col(2) = out.col(1);
  return out;
}

Vec2 FdGradient(const ScalarField& field, const Vec2& x, double step) {
  return Vec2(Axis<double>(field, x, step, 0, kW1, 1, 0.0),
              Axis<double>(field, x, step, 1, kW1, 1, 0.0));
}

Mat2 FdHessian(const ScalarField& field, const Vec2& x, double step) {
  Mat2 h;
  h(0, 0) = Axis<double>(field, x, step, 0, kW2, 2, 0.0);
  h(1, 1) = Axis<double>(field, x, step, 1, kW2, 2, 0.0);
  h(0, 1) = h(1, 0) = Mixed<double>(field, x, step, 0.0);
  return h;
}

}  // namespace patchshade::testing
