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

#include "patchshade/renderer.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "patchshade/error.h"

namespace patchshade {

LightModel HemisphericLight(const Vec3& direction) {
  if (!(direction.norm() > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "hemispheric light needs a nonzero direction");
  }
  return LightModel{0.5 * direction.normalized(), 0.5};
}

RenderedImage Render(const MongePatch& patch, const SamplingGrid& grid, const LightModel& light,
                     ClampMode clamp) {
  if (grid.width <= 0 || grid.height <= 0 || !(grid.spacing > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "render grid must be non-empty with positive spacing");
  }
  if (!light.l.allFinite() || !std::isfinite(light.ambient)) {
    throw Error(ErrorCode::kInvalidArgument, "light must be finite");
  }
  RenderedImage img;
  img.grid = grid;
  img.light = light;
  img.clamp = clamp;
  img.intensities.resize(grid.size());
  for (int j = 0; j < grid.height; ++j) {
    for (int i = 0; i < grid.width; ++i) {
      double v = light.l.dot(patch.Normal(grid.Node(i, j))) + light.ambient;
      if (clamp == ClampMode::kZeroFloor) v = std::max(v, 0.0);
      img.intensities[grid.Index(i, j)] = v;
    }
  }
  return img;
}

RenderedImage Render(const MongePatch& sampled, const LightModel& light, ClampMode clamp) {
  const HeightGrid* g = sampled.grid();
  if (g == nullptr) throw Error(ErrorCode::kInvalidArgument, "analytic patches need an explicit grid");
  return Render(sampled, SamplingGrid{g->width, g->height, g->spacing, g->origin}, light, clamp);
}

ImageJet JetAt(const RenderedImage& img, int i, int j) {
  const SamplingGrid& g = img.grid;
  if (i < 0 || j < 0 || i >= g.width || j >= g.height || g.OnBorder(i, j)) {
    std::ostringstream msg;
    msg << "pixel (" << i << ", " << j << ") has no central-difference neighbourhood";
    throw Error(ErrorCode::kBoundaryPixel, msg.str());
  }
  const double s = g.spacing;
  ImageJet jet;
  jet.at = g.Node(i, j);
  jet.intensity = img.at(i, j);
  jet.gradient = Vec2(img.at(i + 1, j) - img.at(i - 1, j), img.at(i, j + 1) - img.at(i, j - 1)) / (2 * s);
  const double ixx = (img.at(i + 1, j) - 2 * jet.intensity + img.at(i - 1, j)) / (s * s);
  const double iyy = (img.at(i, j + 1) - 2 * jet.intensity + img.at(i, j - 1)) / (s * s);
  const double ixy = (img.at(i + 1, j + 1) - img.at(i + 1, j - 1) - img.at(i - 1, j + 1) +
                      img.at(i - 1, j - 1)) / (4 * s * s);
  jet.hessian << ixx, ixy, ixy, iyy;
  return jet;
}

ImageJet AnalyticJet(const MongePatch& patch, const LightModel& light, const Vec2& x) {
  const NormalJet n = NormalDerivatives(patch, x);
  ImageJet jet;
  jet.at = x;
  jet.intensity = light.l.dot(n.n) + light.ambient;
  jet.gradient = n.dn.transpose() * light.l;
  jet.hessian = Matricize(n.d2n.transpose() * light.l);
  return jet;
}

double DefaultGradTol(const RenderedImage& img) {
  double scale = 0.0;
  for (double v : img.intensities) scale = std::max(scale, std::abs(v));
  return std::max(1e-9 * scale / img.grid.spacing, 1e-300);
}

Vec2 IsophoteDirection(const ImageJet& jet, double grad_tol) {
  const double norm = jet.gradient.norm();
  if (!(norm > grad_tol)) {
    std::ostringstream msg;
    msg << "|grad I| = " << norm << " <= " << grad_tol;
    throw Error(ErrorCode::kFlatRegion, msg.str());
  }
  Vec2 t(-jet.gradient.y() / norm, jet.gradient.x() / norm);
  if (t.x() < 0.0 || (t.x() == 0.0 && t.y() < 0.0)) t = -t;
  return t;
}

}  // namespace patchshade
