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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "patchshade/error.h"
#include "patchshade/image_io.h"
#include "test_support.h"

namespace patchshade {
namespace {

using testing::MaxAbsDiff;

MongePatch RandomBumps(std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<GaussianBump> bumps;
  for (int k = 0; k < count; ++k) {
    bumps.push_back({Vec2(4 + 8 * u(rng), 4 + 8 * u(rng)), 2.0 * u(rng) - 1.0, 2.0 + 2.0 * u(rng)});
  }
  return MongePatch::Analytic(bumps);
}

SamplingGrid Grid16() { return SamplingGrid{16, 16, 1.0, Vec2::Zero()}; }

std::filesystem::path TempPath(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("patchshade_renderer_" + name);
}

TEST(RenderTest, FlatPatchIsConstant) {
  const RenderedImage img = Render(MongePatch::Analytic({}), Grid16(), {Vec3::UnitZ(), 0.0}, ClampMode::kNone);
  for (double v : img.intensities) EXPECT_EQ(v, 1.0);
}

TEST(RenderTest, ParaboloidPeaksAtApex) {
  CubicHeight c;
  c.hessian = Mat2::Identity();
  const SamplingGrid grid{21, 21, 0.1, Vec2(-1.0, -1.0)};
  const RenderedImage img = Render(MongePatch::Analytic({}, c), grid, {Vec3::UnitZ(), 0.0}, ClampMode::kNone);
  EXPECT_DOUBLE_EQ(img.at(10, 10), 1.0);
  for (int i = 11; i < 21; ++i) EXPECT_LT(img.at(i, 10), img.at(i - 1, 10));
  for (int k = 11; k < 21; ++k) EXPECT_LT(img.at(k, k), img.at(k - 1, k - 1));
}

TEST(RenderTest, MatchesIndependentNormals) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const MongePatch patch = RandomBumps(rng, 3);
    const LightModel light{testing::RandomUnit(rng), 0.25};
    const RenderedImage img = Render(patch, Grid16(), light, ClampMode::kNone);
    for (int j = 0; j < 16; ++j) {
      for (int i = 0; i < 16; ++i) {
        const Vec3 n = NormalDerivatives(patch, img.grid.Node(i, j)).n;
        EXPECT_NEAR(img.at(i, j), light.l.dot(n) + light.ambient, 1e-12);
      }
    }
  }
}

TEST(RenderTest, ZeroFloorClampsShadows) {
  std::mt19937_64 rng(2);
  const MongePatch patch = RandomBumps(rng, 4);
  const LightModel light{Vec3(1.0, 0.0, 0.1).normalized(), 0.0};
  const RenderedImage img = Render(patch, Grid16(), light, ClampMode::kZeroFloor);
  for (double v : img.intensities) EXPECT_GE(v, 0.0);
}

TEST(RenderTest, HemisphericLightIsNonNegative) {
  std::mt19937_64 rng(3);
  const MongePatch patch = RandomBumps(rng, 4);
  const LightModel light = HemisphericLight(Vec3(-1.0, 0.3, 0.2));
  EXPECT_GE(light.ambient, light.l.norm());
  const RenderedImage img = Render(patch, Grid16(), light, ClampMode::kNone);
  for (double v : img.intensities) EXPECT_GE(v, 0.0);
}

TEST(JetAtTest, ConstantImageHasZeroDerivatives) {
  const RenderedImage img = Render(MongePatch::Analytic({}), Grid16(), {Vec3(0.2, 0.1, 0.9), 0.1}, ClampMode::kNone);
  const ImageJet jet = JetAt(img, 5, 7);
  EXPECT_TRUE(jet.gradient.isZero(0.0));
  EXPECT_TRUE(jet.hessian.isZero(0.0));
}

TEST(JetAtTest, CylinderIsophotesRunAlongY) {
  CubicHeight c;
  c.hessian << 1, 0, 0, 0;
  const SamplingGrid grid{11, 11, 0.1, Vec2(-0.5, -0.5)};
  const RenderedImage img = Render(MongePatch::Analytic({}, c), grid, {Vec3::UnitZ(), 0.0}, ClampMode::kNone);
  const ImageJet jet = JetAt(img, 7, 4);
  EXPECT_EQ(jet.gradient.y(), 0.0);
  EXPECT_LT(jet.gradient.x(), 0.0);
  EXPECT_EQ(IsophoteDirection(jet, DefaultGradTol(img)), Vec2(0.0, 1.0));
}

TEST(JetAtTest, BorderPixelsAreRejected) {
  const RenderedImage img = Render(MongePatch::Analytic({}), Grid16(), {Vec3::UnitZ(), 0.0}, ClampMode::kNone);
  for (auto [i, j] : {std::pair{0, 5}, {15, 5}, {5, 0}, {5, 15}, {-1, 3}}) {
    try {
      JetAt(img, i, j);
      FAIL() << "expected BoundaryPixel at " << i << "," << j;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kBoundaryPixel);
    }
  }
}

TEST(JetAtTest, FiniteDifferenceJetConvergesAtSecondOrder) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const MongePatch patch = RandomBumps(rng, 3);
    const LightModel light{testing::RandomUnit(rng), 0.0};
    const Vec2 x(7.3, 8.1);
    const ImageJet exact = AnalyticJet(patch, light, x);
    double err[2];
    for (int level = 0; level < 2; ++level) {
      const double step = level == 0 ? 0.02 : 0.01;
      const SamplingGrid grid{3, 3, step, x - Vec2(step, step)};
      const ImageJet fd = JetAt(Render(patch, grid, light, ClampMode::kNone), 1, 1);
      err[level] = std::max(MaxAbsDiff(fd.gradient, exact.gradient), MaxAbsDiff(fd.hessian, exact.hessian));
    }
    EXPECT_NEAR(err[0] / err[1], 4.0, 0.2);
  }
}

TEST(JetAtTest, AnalyticJetAgreesWithFrameBasedDerivatives) {
  std::mt19937_64 rng(5);
  const MongePatch patch = RandomBumps(rng, 3);
  const LightModel light{testing::RandomUnit(rng), 0.0};
  const Vec2 x(6.0, 9.0);
  const LocalSurfaceFrame fr = FrameAt(patch, x);
  const ImageJet jet = AnalyticJet(patch, light, x);
  EXPECT_LT(MaxAbsDiff(jet.gradient, GradientFromLight(light, fr)), 1e-12);
  EXPECT_LT(MaxAbsDiff(jet.hessian, Matricize(D2nMongeUnfolded(fr).transpose() * light.l)), 1e-12);
  EXPECT_LT(std::abs(jet.hessian(0, 1) - jet.hessian(1, 0)), 1e-12);
  // A light rebuilt from (I, grad I) through the frame renders the same jet.
  const LightModel rebuilt = RecoverLight(jet.intensity, jet.gradient, fr);
  const ImageJet again = AnalyticJet(patch, rebuilt, x);
  EXPECT_NEAR(again.intensity, jet.intensity, 1e-12);
  EXPECT_LT(MaxAbsDiff(again.gradient, jet.gradient), 1e-12);
  EXPECT_LT(MaxAbsDiff(again.hessian, jet.hessian), 1e-10);
}

TEST(JetAtTest, RenderedHessiansAreSymmetric) {
  std::mt19937_64 rng(6);
  const MongePatch patch = RandomBumps(rng, 5);
  const RenderedImage img = Render(patch, Grid16(), HemisphericLight(Vec3(0.3, 0.4, 1.0)), ClampMode::kNone);
  for (int j = 1; j < 15; ++j)
    for (int i = 1; i < 15; ++i) EXPECT_LT(std::abs(JetAt(img, i, j).hessian(0, 1) - JetAt(img, i, j).hessian(1, 0)), 1e-9);
}

TEST(IsophoteTest, DirectionsAndFlatRegion) {
  ImageJet jet;
  jet.gradient = Vec2(1, 0);
  EXPECT_EQ(IsophoteDirection(jet, 1e-9), Vec2(0, 1));
  jet.gradient = Vec2(0, 2);
  EXPECT_EQ(IsophoteDirection(jet, 1e-9), Vec2(1, 0));
  jet.gradient = Vec2(1e-15, 0);
  try {
    IsophoteDirection(jet, 1e-9);
    FAIL() << "expected FlatRegion";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFlatRegion);
  }
}

TEST(ImageIoTest, SidecarRoundTripIsExact) {
  std::mt19937_64 rng(7);
  const RenderedImage img = Render(RandomBumps(rng, 3), Grid16(), {Vec3(0.1, 0.2, 0.9), 0.05}, ClampMode::kZeroFloor);
  const auto path = TempPath("sidecar.txt");
  WriteImageSidecar(path, img);
  const RenderedImage back = ReadImageSidecar(path);
  EXPECT_EQ(back.intensities, img.intensities);
  EXPECT_EQ(back.grid.width, 16);
  EXPECT_EQ(back.light.l, img.light.l);
  EXPECT_EQ(back.light.ambient, img.light.ambient);
  EXPECT_EQ(back.clamp, ClampMode::kZeroFloor);
  std::filesystem::remove(path);
}

TEST(ImageIoTest, Pgm16RoundTripWithinQuantization) {
  std::mt19937_64 rng(8);
  const RenderedImage img = Render(RandomBumps(rng, 3), Grid16(), HemisphericLight(Vec3::UnitZ()), ClampMode::kNone);
  const auto path = TempPath("image.pgm");
  WritePgm16(path, 16, 16, img.intensities);
  const PgmImage back = ReadPgm16(path);
  ASSERT_EQ(back.values.size(), img.intensities.size());
  const auto [lo, hi] = std::minmax_element(img.intensities.begin(), img.intensities.end());
  for (size_t k = 0; k < back.values.size(); ++k) {
    EXPECT_NEAR(back.values[k], img.intensities[k], (*hi - *lo) / 65535.0);
  }
  std::filesystem::remove(path);
}

TEST(ImageIoTest, HeightGridRoundTrip) {
  HeightGrid g{3, 2, 0.5, Vec2::Zero(), {0.1, 0.2, 0.3, -1.0, 1e-17, 2.0 / 3.0}};
  const auto path = TempPath("height.txt");
  WriteHeightGrid(path, g);
  const HeightGrid back = ReadHeightGrid(path);
  EXPECT_EQ(back.values, g.values);
  EXPECT_EQ(back.spacing, 0.5);
  std::filesystem::remove(path);
}

TEST(ImageIoTest, PngHasSignatureAndMissingFilesFail) {
  const auto path = TempPath("image.png");
  WritePngGray(path, 4, 2, ToGray8({0, 1, 2, 3, 4, 5, 6, 7}));
  std::ifstream in(path, std::ios::binary);
  char sig[8];
  in.read(sig, 8);
  EXPECT_EQ(std::string(sig + 1, 3), "PNG");
  std::filesystem::remove(path);
  EXPECT_THROW(ReadImageSidecar("/nonexistent/dir/x.txt"), Error);
}

}  // namespace
}  // namespace patchshade
