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

#ifndef PATCHSHADE_SHADING_STATS_H_
#define PATCHSHADE_SHADING_STATS_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "patchshade/surface_geometry.h"

namespace patchshade {

// I = l . n + ambient, with l scaled by irradiance (not necessarily unit).
struct LightModel {
  Vec3 l = Vec3::UnitZ();
  double ambient = 0.0;
};

// Independent generator for one slot of a parallel computation; the same
// (seed, stream) pair always yields the same sequence.
std::mt19937_64 SplitStream(std::uint64_t seed, std::uint64_t stream);

// Distribution over light vectors: a direction law on the unit sphere times a
// radial law. The default radial law puts all mass at |l| = 1.
class LightDistribution {
 public:
  enum class Kind { kUniformSphere, kUniformUpperHemisphere, kVonMisesLike };

  static LightDistribution UniformSphere();
  // Directions with z >= 0 (towards the viewer).
  static LightDistribution UniformUpperHemisphere();
  // Density proportional to exp(concentration * mean . l) on the sphere.
  static LightDistribution VonMisesLike(const Vec3& mean, double concentration);

  // Same direction law with |l| uniform on [r_min, r_max], giving an ordinary
  // 3-D density. Requires 0 < r_min < r_max.
  LightDistribution WithShell(double r_min, double r_max) const;

  Kind kind() const { return kind_; }
  bool unit_radius() const { return r_max_ == r_min_; }
  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }

  // Density of the direction with respect to area on the unit sphere.
  double AngularDensity(const Vec3& unit) const;

  Vec3 SampleDirection(std::mt19937_64& rng) const;
  Vec3 Sample(std::mt19937_64& rng) const;

  // Unit radius: the coefficient of delta(|l| - 1), i.e. AngularDensity of
  // l / |l|; throws kOutOfSupport unless | |l| - 1 | <= 1e-6. Shell: the 3-D
  // density, throwing kOutOfSupport outside [r_min, r_max].
  double Density(const Vec3& l) const;

  // Density of the component of l orthogonal to `normal`, evaluated at the
  // tangential vector `tangential` (area measure on the tangent plane).
  // Throws kOutOfSupport when |tangential| reaches the outer radius.
  double TangentialDensity(const Vec3& tangential, const Vec3& normal) const;

  // Density of l restricted to the line tangential + span(normal), evaluated
  // at l; 0 off the support. For the unit radius this is the weight
  // AngularDensity / |l . normal| carried by each of the two intersections.
  double LineDensity(const Vec3& l, const Vec3& normal) const;

 private:
  LightDistribution(Kind kind, Vec3 mean, double concentration)
      : kind_(kind), mean_(mean), concentration_(concentration) {}

  Kind kind_;
  Vec3 mean_;
  double concentration_;
  double r_min_ = 1.0;
  double r_max_ = 1.0;
};

// Image derivatives predicted by the linear model.
double IntensityFromLight(const LightModel& light, const LocalSurfaceFrame& fr);
Vec2 GradientFromLight(const LightModel& light, const LocalSurfaceFrame& fr);

// vec(H)^T = l^T D2nUnf, symmetrized.
Mat2 HessianFromLight(const LightModel& light, const LocalSurfaceFrame& fr);

// Second-order shading equation without an explicit light:
// vec(H)^T = (I n^T + grad^T Dn^+) D2nUnf. `intensity` excludes ambient.
Mat2 HessianFromShading(double intensity, const Vec2& gradient, const LocalSurfaceFrame& fr);

// cos(slant) / |kappa1 kappa2| * p_t(Dn^+T grad). Throws kRankDeficient when
// Dn has rank < 2 and kOutOfSupport as TangentialDensity().
double GradientDensity(const Vec2& gradient, const LocalSurfaceFrame& fr,
                       const LightDistribution& dist);

// Density of vech(H): cos^3(slant) / |m| * p_l(D2n^+T vec(H)). Throws
// kDegenerate when the curvature tensor is degenerate and kOutOfSupport as
// Density().
double HessianDensity(const Mat2& hessian, const LocalSurfaceFrame& fr,
                      const LightDistribution& dist);

// cos^4(slant) / (|kappa1 kappa2| |m|) * p_line(l_H), where l_H is the light
// implied by the Hessian and p_line is LineDensity() on the line fixed by the
// gradient. Zero when the Hessian's light does not project onto the
// gradient's tangential light or lies off the support.
double JointDensity(const Vec2& gradient, const Mat2& hessian, const LocalSurfaceFrame& fr,
                    const LightDistribution& dist);

// l = I n + Dn^+T grad (ambient already removed). Throws kRankDeficient when
// Dn has rank < 2.
LightModel RecoverLight(double intensity, const Vec2& gradient, const LocalSurfaceFrame& fr);

enum class Rank1Tag {
  kPlanarInflection,
  kGeneralizedCylinder,
  kCurvatureCritical,
  kFullRank2,
  kFullRank3,
};

const char* Rank1TagName(Rank1Tag tag);

struct Rank1Class {
  Rank1Tag tag = Rank1Tag::kFullRank3;
  // Rank of the curvature tensor after normalization (0 for a plane).
  int numerical_rank = 3;
  // Human-readable list of the conditions that held.
  std::vector<std::string> conditions;
  // kappa2^2 / kappa1^2 when the curvature-critical case fires, else NaN.
  double case3_ratio = 0.0;
};

// Absolute tolerance on curvature-normalized quantities.
inline constexpr double kClassTol = 1e-8;

Rank1Class ClassifyRank1(const LocalSurfaceFrame& fr);

}  // namespace patchshade

#endif  // PATCHSHADE_SHADING_STATS_H_
