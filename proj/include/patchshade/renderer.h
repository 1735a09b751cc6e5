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

#ifndef PATCHSHADE_RENDERER_H_
#define PATCHSHADE_RENDERER_H_

#include <vector>

#include "patchshade/shading_stats.h"
#include "patchshade/surface_geometry.h"

namespace patchshade {

// Node (i, j) sits at origin + spacing * (i, j); values are row-major.
struct SamplingGrid {
  int width = 0;
  int height = 0;
  double spacing = 1.0;
  Vec2 origin = Vec2::Zero();

  Vec2 Node(int i, int j) const { return origin + spacing * Vec2(i, j); }
  int Index(int i, int j) const { return j * width + i; }
  int size() const { return width * height; }
  bool OnBorder(int i, int j) const {
    return i == 0 || j == 0 || i == width - 1 || j == height - 1;
  }
};

enum class ClampMode { kNone, kZeroFloor };

struct RenderedImage {
  SamplingGrid grid;
  std::vector<double> intensities;
  LightModel light;
  ClampMode clamp = ClampMode::kNone;

  double at(int i, int j) const { return intensities[grid.Index(i, j)]; }
};

// Sky-dome lighting from `direction`: a point on the surface sees
// (1 + d.n) / 2 of a unit sky, i.e. l = d / 2 and ambient 1/2. The image is
// then never negative, so it is rendered without clamping.
LightModel HemisphericLight(const Vec3& direction);

// I = l.n + ambient at every node (unit albedo), floored at 0 for kZeroFloor.
// Throws kInvalidArgument for an empty grid or non-positive spacing.
RenderedImage Render(const MongePatch& patch, const SamplingGrid& grid, const LightModel& light,
                     ClampMode clamp);

// Sampled patches render on their own grid.
RenderedImage Render(const MongePatch& sampled, const LightModel& light, ClampMode clamp);

struct ImageJet {
  double intensity = 0.0;
  Vec2 gradient = Vec2::Zero();
  Mat2 hessian = Mat2::Zero();
  Vec2 at = Vec2::Zero();
};

// Second-order central differences: 3-point first and pure second
// derivatives, the 4-point cross stencil for I_xy. Throws kBoundaryPixel on
// the outer ring.
ImageJet JetAt(const RenderedImage& img, int i, int j);

// Exact (l^T Dn, l^T D2n) jet of an unclamped render of an analytic patch.
ImageJet AnalyticJet(const MongePatch& patch, const LightModel& light, const Vec2& x);

// 1e-9 * (max |I|) / spacing, floored at 1e-300.
double DefaultGradTol(const RenderedImage& img);

// Unit vector orthogonal to the gradient with a positive x component (or
// positive y when x is zero). Throws kFlatRegion when |grad| <= grad_tol.
Vec2 IsophoteDirection(const ImageJet& jet, double grad_tol);

}  // namespace patchshade

#endif  // PATCHSHADE_RENDERER_H_
