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

#include "patchshade/shading_stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "patchshade/error.h"

namespace patchshade {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kUnitSupportTol = 1e-6;

[[noreturn]] void OutOfSupport(const std::string& what, double value) {
  std::ostringstream msg;
  msg << what << " (" << value << ") is outside the light distribution's support";
  throw Error(ErrorCode::kOutOfSupport, msg.str());
}

// Any unit vector orthogonal to `axis`.
Vec3 Perpendicular(const Vec3& axis) {
  const Vec3 trial = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return (trial - axis * axis.dot(trial)).normalized();
}

}  // namespace

std::mt19937_64 SplitStream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

LightDistribution LightDistribution::UniformSphere() {
  return LightDistribution(Kind::kUniformSphere, Vec3::UnitZ(), 0.0);
}

LightDistribution LightDistribution::UniformUpperHemisphere() {
  return LightDistribution(Kind::kUniformUpperHemisphere, Vec3::UnitZ(), 0.0);
}

LightDistribution LightDistribution::VonMisesLike(const Vec3& mean, double concentration) {
  if (!(mean.norm() > 0.0) || !(concentration >= 0.0) || !std::isfinite(concentration)) {
    throw Error(ErrorCode::kInvalidArgument, "von Mises-like light needs a nonzero mean and concentration >= 0");
  }
  return LightDistribution(Kind::kVonMisesLike, mean.normalized(), concentration);
}

LightDistribution LightDistribution::WithShell(double r_min, double r_max) const {
  if (!(r_min > 0.0) || !(r_max > r_min)) {
    throw Error(ErrorCode::kInvalidArgument, "light shell needs 0 < r_min < r_max");
  }
  LightDistribution out = *this;
  out.r_min_ = r_min;
  out.r_max_ = r_max;
  return out;
}

double LightDistribution::AngularDensity(const Vec3& unit) const {
  switch (kind_) {
    case Kind::kUniformSphere:
      return 1.0 / (4.0 * kPi);
    case Kind::kUniformUpperHemisphere:
      return unit.z() >= 0.0 ? 1.0 / (2.0 * kPi) : 0.0;
    case Kind::kVonMisesLike: {
      const double k = concentration_;
      if (k < 1e-12) return 1.0 / (4.0 * kPi);
      // k / (4 pi sinh k) exp(k mu.x), rewritten to avoid overflow.
      return k / (2.0 * kPi * -std::expm1(-2.0 * k)) * std::exp(k * (mean_.dot(unit) - 1.0));
    }
  }
  return 0.0;
}

Vec3 LightDistribution::SampleDirection(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (kind_) {
    case Kind::kUniformSphere:
    case Kind::kUniformUpperHemisphere: {
      Vec3 v;
      do {
        v = Vec3(normal(rng), normal(rng), normal(rng));
      } while (v.squaredNorm() == 0.0);
      v.normalize();
      if (kind_ == Kind::kUniformUpperHemisphere && v.z() < 0.0) v.z() = -v.z();
      return v;
    }
    case Kind::kVonMisesLike: {
      const double k = concentration_;
      const double u = unit(rng);
      double w;
      if (k < 1e-12) {
        w = 2.0 * u - 1.0;
      } else {
        // Inverse CDF of the cosine to the mean (Wood, 1994, for the 2-sphere).
        w = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * k)) / k;
      }
      w = std::clamp(w, -1.0, 1.0);
      const double angle = 2.0 * kPi * unit(rng);
      const Vec3 e1 = Perpendicular(mean_);
      const Vec3 e2 = mean_.cross(e1);
      const double r = std::sqrt(std::max(0.0, 1.0 - w * w));
      return w * mean_ + r * (std::cos(angle) * e1 + std::sin(angle) * e2);
    }
  }
  return Vec3::UnitZ();
}

Vec3 LightDistribution::Sample(std::mt19937_64& rng) const {
  const Vec3 dir = SampleDirection(rng);
  if (unit_radius()) return dir;
  std::uniform_real_distribution<double> radius(r_min_, r_max_);
  return radius(rng) * dir;
}

double LightDistribution::Density(const Vec3& l) const {
  const double r = l.norm();
  if (unit_radius()) {
    if (std::abs(r - 1.0) > kUnitSupportTol) OutOfSupport("|l|", r);
    return AngularDensity(l / r);
  }
  if (r < r_min_ || r > r_max_) OutOfSupport("|l|", r);
  return AngularDensity(l / r) / (r * r * (r_max_ - r_min_));
}

double LightDistribution::TangentialDensity(const Vec3& tangential, const Vec3& normal) const {
  const Vec3 n = normal.normalized();
  const Vec3 lt = tangential - n * n.dot(tangential);
  const double rho2 = lt.squaredNorm();
  const double rho = std::sqrt(rho2);
  if (unit_radius()) {
    if (rho >= 1.0) OutOfSupport("|l_t|", rho);
    const double s = std::sqrt(1.0 - rho2);
    if (kind_ == Kind::kUniformSphere) return 1.0 / (2.0 * kPi * s);
    return (AngularDensity(lt + s * n) + AngularDensity(lt - s * n)) / s;
  }
  if (rho >= r_max_) OutOfSupport("|l_t|", rho);
  const double lo = std::sqrt(std::max(0.0, r_min_ * r_min_ - rho2));
  const double hi = std::sqrt(r_max_ * r_max_ - rho2);
  auto along = [&](double s) {
    const Vec3 l = lt + s * n;
    const double r = l.norm();
    return AngularDensity(l / r) / (r * r * (r_max_ - r_min_));
  };
  using boost::math::quadrature::gauss_kronrod;
  const double up = gauss_kronrod<double, 31>::integrate(along, lo, hi, 15, 1e-12);
  const double down = gauss_kronrod<double, 31>::integrate(along, -hi, -lo, 15, 1e-12);
  return up + down;
}

double LightDistribution::LineDensity(const Vec3& l, const Vec3& normal) const {
  const double r = l.norm();
  if (unit_radius()) {
    if (std::abs(r - 1.0) > kUnitSupportTol) return 0.0;
    const double s = std::abs(l.dot(normal.normalized()));
    if (s == 0.0) return std::numeric_limits<double>::infinity();
    return AngularDensity(l / r) / s;
  }
  if (r < r_min_ || r > r_max_) return 0.0;
  return Density(l);
}

double IntensityFromLight(const LightModel& light, const LocalSurfaceFrame& fr) {
  return light.l.dot(BasisOf(fr).normal) + light.ambient;
}

Vec2 GradientFromLight(const LightModel& light, const LocalSurfaceFrame& fr) {
  return DnFromFrame(fr).Dn.transpose() * light.l;
}

namespace {

Mat2 SymmetricFromRow(const Eigen::Matrix<double, 1, 4>& row) {
  Mat2 h = Matricize(row.transpose());
  const double off = 0.5 * (h(0, 1) + h(1, 0));
  h(0, 1) = h(1, 0) = off;
  return h;
}

DnDecomposition FullRankDn(const LocalSurfaceFrame& fr) {
  DnDecomposition d = DnFromFrame(fr);
  if (d.rank < 2 || fr.kappa1 * fr.kappa2 == 0.0) {
    std::ostringstream msg;
    msg << "Dn has rank " << d.rank << " (kappa1 kappa2 = " << fr.kappa1 * fr.kappa2 << ")";
    throw Error(ErrorCode::kRankDeficient, msg.str());
  }
  return d;
}

D2nDecomposition NondegenerateD2n(const LocalSurfaceFrame& fr) {
  D2nDecomposition d = D2nFromFrame(fr);
  if (d.degenerate) {
    std::ostringstream msg;
    msg << "curvature tensor is degenerate (m = " << d.m << ")";
    throw Error(ErrorCode::kDegenerate, msg.str());
  }
  return d;
}

}  // namespace

Mat2 HessianFromLight(const LightModel& light, const LocalSurfaceFrame& fr) {
  return SymmetricFromRow(light.l.transpose() * D2nFromFrame(fr).D2nUnf);
}

Mat2 HessianFromShading(double intensity, const Vec2& gradient, const LocalSurfaceFrame& fr) {
  const Vec3 n = BasisOf(fr).normal;
  const DnDecomposition dn = DnFromFrame(fr);
  const Eigen::Matrix<double, 1, 3> l =
      intensity * n.transpose() + gradient.transpose() * dn.DnPlus;
  return SymmetricFromRow(l * D2nFromFrame(fr).D2nUnf);
}

double GradientDensity(const Vec2& gradient, const LocalSurfaceFrame& fr,
                       const LightDistribution& dist) {
  const DnDecomposition dn = FullRankDn(fr);
  const Vec3 lt = dn.DnPlus.transpose() * gradient;
  return dist.TangentialDensity(lt, BasisOf(fr).normal) / dn.sqrt_det;
}

double HessianDensity(const Mat2& hessian, const LocalSurfaceFrame& fr,
                      const LightDistribution& dist) {
  const D2nDecomposition d2 = NondegenerateD2n(fr);
  const Vec3 l = d2.D2nPlus.transpose() * Vec(hessian);
  return std::pow(std::cos(fr.slant), 3) / std::abs(d2.m) * dist.Density(l);
}

double JointDensity(const Vec2& gradient, const Mat2& hessian, const LocalSurfaceFrame& fr,
                    const LightDistribution& dist) {
  const DnDecomposition dn = FullRankDn(fr);
  const D2nDecomposition d2 = NondegenerateD2n(fr);
  const Vec3 n = BasisOf(fr).normal;
  const Vec3 lt = dn.DnPlus.transpose() * gradient;
  const Vec3 l_hess = d2.D2nPlus.transpose() * Vec(hessian);
  const Vec3 lt_hess = l_hess - n * n.dot(l_hess);
  if ((lt_hess - lt).norm() > 1e-8 * std::max(1.0, l_hess.norm())) return 0.0;
  const double c = std::cos(fr.slant);
  return c * c * c * c / (std::abs(fr.kappa1 * fr.kappa2) * std::abs(d2.m)) *
         dist.LineDensity(l_hess, n);
}

LightModel RecoverLight(double intensity, const Vec2& gradient, const LocalSurfaceFrame& fr) {
  const DnDecomposition dn = FullRankDn(fr);
  LightModel out;
  out.l = intensity * BasisOf(fr).normal + dn.DnPlus.transpose() * gradient;
  out.ambient = 0.0;
  return out;
}

const char* Rank1TagName(Rank1Tag tag) {
  switch (tag) {
    case Rank1Tag::kPlanarInflection: return "PlanarInflection";
    case Rank1Tag::kGeneralizedCylinder: return "GeneralizedCylinder";
    case Rank1Tag::kCurvatureCritical: return "CurvatureCritical";
    case Rank1Tag::kFullRank2: return "FullRank2";
    case Rank1Tag::kFullRank3: return "FullRank3";
  }
  return "Unknown";
}

Rank1Class ClassifyRank1(const LocalSurfaceFrame& input) {
  const LocalSurfaceFrame fr = Canonicalize(input);
  Rank1Class out;
  out.case3_ratio = std::numeric_limits<double>::quiet_NaN();

  // Normalize to a curvature scale c so curvatures become k / c and
  // third-order terms t / c^2.
  const double third_max = std::max({std::abs(fr.dk1_ds), std::abs(fr.dk1_dt),
                                     std::abs(fr.dk2_ds), std::abs(fr.dk2_dt)});
  const double c = std::max(std::abs(fr.kappa1), std::sqrt(third_max));
  if (c == 0.0) {
    out.tag = Rank1Tag::kPlanarInflection;
    out.numerical_rank = 0;
    out.conditions = {"plane: all curvatures and third-order terms vanish (rank 0)"};
    return out;
  }
  const double k1 = fr.kappa1 / c, k2 = fr.kappa2 / c;
  const double f = fr.dk1_ds / (c * c), g = fr.dk1_dt / (c * c);
  const double h = fr.dk2_ds / (c * c), i = fr.dk2_dt / (c * c);
  auto zero = [](double v) { return std::abs(v) <= kClassTol; };

  LocalSurfaceFrame unit = fr;
  unit.kappa1 = k1;
  unit.kappa2 = k2;
  unit.dk1_ds = f;
  unit.dk1_dt = g;
  unit.dk2_ds = h;
  unit.dk2_dt = i;
  out.numerical_rank = Pinv(CurvatureTensorUnfolded(unit), kClassTol).rank;

  const bool flat = zero(k1) && zero(k2);
  const bool collinear = zero(f * h - g * g) && zero(g * i - h * h) && zero(f * i - g * h);
  const bool third_zero = zero(f) && zero(g) && zero(h) && zero(i);
  bool fired = false;
  if (flat && collinear) {
    out.tag = Rank1Tag::kPlanarInflection;
    out.conditions.push_back("kappa1 = kappa2 = 0 and (f,g), (g,h), (h,i) collinear");
    fired = true;
  }
  if (!zero(f) && zero(g) && zero(h) && zero(i) && zero(k2)) {
    if (!fired) out.tag = Rank1Tag::kGeneralizedCylinder;
    out.conditions.push_back("f != 0, g = h = i = 0, kappa2 = 0");
    fired = true;
  }
  if (third_zero && !flat) {
    if (!fired) out.tag = Rank1Tag::kCurvatureCritical;
    out.case3_ratio = (k2 * k2) / (k1 * k1);
    std::ostringstream cond;
    cond << "f = g = h = i = 0, kappa2^2 = " << out.case3_ratio << " kappa1^2";
    if (zero(k2)) cond << " (plain cylinder)";
    out.conditions.push_back(cond.str());
    fired = true;
  }
  if (!fired) {
    out.tag = out.numerical_rank >= 3 ? Rank1Tag::kFullRank3 : Rank1Tag::kFullRank2;
    std::ostringstream cond;
    cond << "numerical rank " << out.numerical_rank;
    out.conditions.push_back(cond.str());
  }
  return out;
}

}  // namespace patchshade
