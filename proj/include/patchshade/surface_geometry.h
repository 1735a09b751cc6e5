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

#ifndef PATCHSHADE_SURFACE_GEOMETRY_H_
#define PATCHSHADE_SURFACE_GEOMETRY_H_

#include <array>
#include <optional>
#include <variant>
#include <vector>

#include "patchshade/tensor_kit.h"

namespace patchshade {

// h(x, y) = amplitude * exp(-|x - center|^2 / (2 width^2)).
struct GaussianBump {
  Vec2 center = Vec2::Zero();
  double amplitude = 0.0;
  double width = 1.0;
};

// Third-order Taylor polynomial about `origin`, stored by its derivatives:
//   h = value + gradient.d + d^T hessian d / 2 + T(d, d, d) / 6,
// with T given by `third` = (h_xxx, h_xxy, h_xyy, h_yyy).
struct CubicHeight {
  Vec2 origin = Vec2::Zero();
  double value = 0.0;
  Vec2 gradient = Vec2::Zero();
  Mat2 hessian = Mat2::Zero();
  std::array<double, 4> third = {0.0, 0.0, 0.0, 0.0};
};

// Sampled heights on a rectangular grid; node (i, j) sits at
// origin + spacing * (i, j) and is stored at values[j * width + i].
struct HeightGrid {
  int width = 0;
  int height = 0;
  double spacing = 1.0;
  Vec2 origin = Vec2::Zero();
  std::vector<double> values;

  double at(int i, int j) const { return values[static_cast<size_t>(j) * width + i]; }
  Vec2 Node(int i, int j) const { return origin + spacing * Vec2(i, j); }
};

// Height derivatives up to third order at one point.
struct HeightJet {
  double value = 0.0;
  Vec2 gradient = Vec2::Zero();
  Mat2 hessian = Mat2::Zero();
  std::array<double, 4> third = {0.0, 0.0, 0.0, 0.0};  // xxx, xxy, xyy, yyy
  bool has_third = false;
};

// A surface s(x, y) = (x, y, h(x, y)) over the image plane. Either analytic
// (Gaussian bumps plus an optional cubic) or sampled on a grid.
class MongePatch {
 public:
  static MongePatch Analytic(std::vector<GaussianBump> bumps, CubicHeight cubic = {});
  // Throws kInvalidArgument for non-positive spacing, a size mismatch or
  // non-finite heights.
  static MongePatch Sampled(HeightGrid grid);

  bool analytic() const { return std::holds_alternative<AnalyticForm>(form_); }

  double Height(const Vec2& x) const;

  // Analytic patches: exact derivatives anywhere. Sampled patches: x must be
  // a grid node; derivatives come from central differences (fourth order
  // where two neighbours exist on each side) and has_third is false.
  HeightJet Jet(const Vec2& x) const;

  // Viewer-facing unit normal (-h_x, -h_y, 1) / |.|.
  Vec3 Normal(const Vec2& x) const;

  const std::vector<GaussianBump>& bumps() const;
  const CubicHeight& cubic() const;
  // Null for analytic patches.
  const HeightGrid* grid() const;

 private:
  struct AnalyticForm {
    std::vector<GaussianBump> bumps;
    CubicHeight cubic;
  };
  explicit MongePatch(std::variant<AnalyticForm, HeightGrid> form) : form_(std::move(form)) {}

  std::variant<AnalyticForm, HeightGrid> form_;
};

// Grid node indices of `x`, or nullopt when x is not (to 1e-9 spacing) a node.
std::optional<std::array<int, 2>> NodeOf(const HeightGrid& grid, const Vec2& x);

// Local surface structure up to third order.
//
// slant is the angle between the normal and the view axis, tilt the image
// direction of steepest ascent of h, and phi the angle of the first principal
// direction measured in the tangent plane from the tilt direction.
//
// Sign convention: curvatures are eigenvalues of the differential of the
// Gauss map of the viewer-facing normal, so Dn = U W K W^T Sigma V^T holds
// with K = diag(kappa1, kappa2). For h = (x^2 + y^2) / 2 this gives
// kappa1 = kappa2 = -1.
//
// The four third-order terms are derivatives of the principal curvatures
// per unit arc length along the oriented principal directions e1 = U W [1,0]
// and e2 = U W [0,1]: dk1_ds, dk1_dt, dk2_ds, dk2_dt.
struct LocalSurfaceFrame {
  double slant = 0.0;
  double tilt = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double phi = 0.0;
  double dk1_ds = 0.0;
  double dk1_dt = 0.0;
  double dk2_ds = 0.0;
  double dk2_dt = 0.0;
  // Set by FrameAt() when |kappa1 - kappa2| is below the umbilic tolerance;
  // phi is then 0.
  bool umbilic = false;
};

// Relative tolerance on |kappa1 - kappa2| below which a point is umbilic.
inline constexpr double kUmbilicTol = 1e-8;
// Relative tolerance on |m| below which the curvature tensor is degenerate.
inline constexpr double kDegenerateTol = 1e-10;

// Swaps the principal directions if needed so that |kappa1| >= |kappa2|. The
// assembled Dn and D2n are unchanged.
LocalSurfaceFrame Canonicalize(const LocalSurfaceFrame& fr);

// Throws kBoundaryPixel when a sampled patch lacks four nodes of margin
// around x (fourth-order stencils for h, then again for the curvatures), and
// kInvalidArgument when x is not a node of a sampled patch.
LocalSurfaceFrame FrameAt(const MongePatch& patch, const Vec2& x,
                          double length_scale = 1.0);

// Rotations and scalings shared by both decompositions.
struct FrameBasis {
  Vec3 normal;
  Mat32 U;      // tilt direction and its perpendicular in the tangent plane
  Mat2 W;       // principal directions in the tilt basis
  Mat2 Sigma;   // diag(1 / cos(slant), 1)
  Mat2 V;       // rotation by tilt
  Mat2 M;       // W^T Sigma V^T: image step -> principal coordinates
  Mat3 U3;      // [U | -normal]
  Mat3 W3;      // W embedded in the identity
};

FrameBasis BasisOf(const LocalSurfaceFrame& fr);

struct DnDecomposition {
  Mat32 U;
  Mat2 W;
  Mat2 K;
  Mat2 Sigma;
  Mat2 V;
  Mat32 Dn;
  Mat23 DnPlus;
  // |kappa1 kappa2| / cos(slant).
  double sqrt_det = 0.0;
  int rank = 0;
};

// DnPlus uses the closed form V Sigma^-1 W K^-1 W^T U^T when kappa1 kappa2 is
// nonzero and the SVD pseudo-inverse otherwise.
DnDecomposition DnFromFrame(const LocalSurfaceFrame& fr);

struct D2nDecomposition {
  Mat3 U3;
  Mat3 W3;
  Mat34 Aunf;      // rows (f g g h), (g h h i), (kappa1^2 0 0 kappa2^2)
  Mat34 D2nUnf;    // U3 W3 Aunf (W^T Sigma V^T) (x) (W^T Sigma V^T)
  Mat43 D2nPlus;
  // kappa1^2 (h^2 - g i) + kappa2^2 (g^2 - f h).
  double m = 0.0;
  // |det(D2nUnf L)| = |m| / cos^3(slant).
  double det_d2n_l = 0.0;
  bool degenerate = false;
};

// Mode-1 unfolding of the fronto-parallel curvature tensor.
Mat34 CurvatureTensorUnfolded(const LocalSurfaceFrame& fr);

double CurvatureTensorScale(const LocalSurfaceFrame& fr);

// D2nPlus is the closed form when the frame is not degenerate and the SVD
// pseudo-inverse of D2nUnf otherwise.
D2nDecomposition D2nFromFrame(const LocalSurfaceFrame& fr);

// Closed-form right inverse of Aunf. Throws kDegenerate when |m| is below
// kDegenerateTol relative to the cube of CurvatureTensorScale().
Mat43 CurvatureTensorPinvClosed(const LocalSurfaceFrame& fr);

// (V Sigma^-1 W) (x) (V Sigma^-1 W) Aunf^+ W3^T U3^T. Throws kDegenerate as
// above.
Mat43 D2nPinvClosed(const LocalSurfaceFrame& fr);

// D2nUnf describes the Taylor normal field posed by a linear domain map.
// For a slanted Monge patch the image-plane second derivative of the normal
// also picks up the curvature of the image-to-surface map:
//   -tan(slant) U W K W^T e1 vec(M^T K M)^T.
// This returns D2nUnf plus that term.
Mat34 D2nMongeUnfolded(const LocalSurfaceFrame& fr);

// Fronto-parallel cubic patch in the principal basis whose frame at the
// origin has the curvatures and third-order terms of fr:
//   h = -(kappa1 x^2 + kappa2 y^2) / 2 - (f x^3 + 3g x^2 y + 3h x y^2 + i y^3) / 6.
// The leading minus follows from the curvature sign convention above.
MongePatch TaylorSurface(const LocalSurfaceFrame& fr);

// Exact normal and its first two image derivatives for an analytic patch.
// Column c of d2n holds the derivative along (c % 2, c / 2).
struct NormalJet {
  Vec3 n;
  Mat32 dn;
  Mat34 d2n;
};

// Throws kInvalidArgument for sampled patches.
NormalJet NormalDerivatives(const MongePatch& patch, const Vec2& x);

}  // namespace patchshade

#endif  // PATCHSHADE_SURFACE_GEOMETRY_H_
