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


#include "patchshade/sfs_solver.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "patchshade/error.h"
#include "patchshade/experiment.h"
#include "test_support.h"

namespace patchshade {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

SamplingGrid Square(int n, double spacing = 1.0) { return {n, n, spacing, Vec2::Zero()}; }

MongePatch Blob(int n) {
  const double ext = n - 1;
  return MongePatch::Analytic({{Vec2(0.45 * ext, 0.5 * ext), 0.25 * ext, 0.18 * ext},
                               {Vec2(0.7 * ext, 0.35 * ext), -0.08 * ext, 0.1 * ext}});
}

LightModel LightAt(double polar_deg, double azimuth_deg) {
  const double p = polar_deg * kDeg, a = azimuth_deg * kDeg;
  return HemisphericLight(Vec3(std::sin(p) * std::cos(a), std::sin(p) * std::sin(a), std::cos(p)));
}

std::vector<double> Flatten(const ReconstructionState& s) {
  std::vector<double> out;
  for (const Vec2& g : s.g) out.insert(out.end(), {g.x(), g.y()});
  return out;
}

TEST(SfsEnergyTest, TruthWithIntensityOnlyIsAtTheOptimum) {
  const SamplingGrid grid = Square(24);
  const MongePatch patch = Blob(24);
  const LightModel light = LightAt(30, 40);
  const SfsEnergy energy(Observe(Render(patch, grid, light, ClampMode::kNone)), light, {1, 0, 0, 0, 0, 0});
  std::vector<Vec2> grad;
  const double e = energy.EnergyAndGradient(ReconstructionState::FromPatch(patch, grid), &grad);
  EXPECT_LT(e, 1e-24);
  double gmax = 0.0;
  for (const Vec2& v : grad) gmax = std::max(gmax, v.cwiseAbs().maxCoeff());
  EXPECT_LT(gmax, 1e-12);
}

TEST(SfsEnergyTest, FlatStateOnFlatImageCostsOnlyTheBoundary) {
  const SamplingGrid grid = Square(10);
  const LightModel light = LightAt(25, 0);
  const EnergyWeights w{4, 100, 150, 0.001, 10, 0.05};
  const SfsEnergy energy(Observe(Render(MongePatch::Analytic({}), grid, light, ClampMode::kNone)), light, w);
  const ReconstructionState flat = ReconstructionState::Flat(grid);
  std::vector<Vec2> grad;
  const double e = energy.EnergyAndGradient(flat, &grad);
  EXPECT_NEAR(e, w.boundary * 36.0, 1e-12);  // 36 border nodes, each missing by 1
  for (int j = 1; j + 1 < grid.height; ++j)
    for (int i = 1; i + 1 < grid.width; ++i) EXPECT_EQ(grad[grid.Index(i, j)].norm(), 0.0);
}

// Every term, alone and summed, against fourth-order central differences.
TEST(SfsEnergyTest, AnalyticGradientMatchesFiniteDifferences) {
  const SamplingGrid grid = Square(7);
  const LightModel light = LightAt(35, 120);
  const Observation obs = Observe(Render(Blob(7), grid, light, ClampMode::kNone));
  const SfsEnergy energy(obs, light, {4, 100, 150, 0.5, 10, 0.05});
  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0.0, 0.4);
  const double step = 1e-4;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> params(energy.NumParameters());
    for (double& v : params) v = noise(rng);
    for (int term = -1; term < 6; ++term) {
      auto value = [&](std::span<const double> p, std::span<double> g) {
        return term < 0 ? energy.Evaluate(p, g).total : energy.TermEnergy(term, p, g);
      };
      std::vector<double> grad(params.size());
      value(params, grad);
      for (size_t c = 0; c < params.size(); ++c) {
        std::vector<double> p = params;
        auto at = [&](double offset) {
          p[c] = params[c] + offset;
          return value(p, {});
        };
        const double fd = (8.0 * (at(step) - at(-step)) - (at(2 * step) - at(-2 * step))) / (12.0 * step);
        const double rel = std::abs(grad[c] - fd) / std::max(1.0, std::abs(fd));
        worst = std::max(worst, rel);
      }
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(SfsEnergyTest, IntegrabilityVanishesOnDiscreteGradientFields) {
  const SamplingGrid grid = Square(12, 0.5);
  const LightModel light = LightAt(20, 10);
  const SfsEnergy energy(Observe(Render(Blob(12), grid, light, ClampMode::kNone)), light, {1, 0, 1, 0, 0, 0});
  auto height = [](double x, double y) { return std::sin(0.7 * x) * std::cos(0.4 * y) + 0.05 * x * y * y; };
  ReconstructionState s = ReconstructionState::Flat(grid);
  const double h = grid.spacing;
  for (int j = 0; j < grid.height; ++j) {
    for (int i = 0; i < grid.width; ++i) {
      const Vec2 x = grid.Node(i, j);
      s.g[grid.Index(i, j)] = Vec2((height(x.x() + h, x.y()) - height(x.x() - h, x.y())) / (2 * h),
                                   (height(x.x(), x.y() + h) - height(x.x(), x.y() - h)) / (2 * h));
    }
  }
  const std::vector<double> p = Flatten(s);
  EXPECT_LT(energy.TermEnergy(2, p, {}), 1e-26);
}

TEST(SfsEnergyTest, CylindricityVanishesOnCylinders) {
  const SamplingGrid grid = Square(16);
  // Height depends on u.x only, so the field is a cylinder along a diagonal.
  const Vec2 u = Vec2(3.0, -1.0).normalized();
  const Mat2 across = u * u.transpose();
  const double c3 = 0.004;
  const MongePatch ridge = MongePatch::Analytic(
      {}, {Vec2(7.5, 7.5), 0.0, 0.1 * u, 0.08 * across,
           {c3 * u.x() * u.x() * u.x(), c3 * u.x() * u.x() * u.y(), c3 * u.x() * u.y() * u.y(), c3 * u.y() * u.y() * u.y()}});
  const LightModel light = LightAt(40, 30);
  const Observation observed = Observe(Render(ridge, grid, light, ClampMode::kNone));
  Observation exact = observed;
  for (Vec2& t : exact.isophotes) t = Vec2(u.y(), -u.x());
  const std::vector<double> p = Flatten(ReconstructionState::FromPatch(ridge, grid));
  const SfsEnergy noiseless(exact, light, {0, 1, 0, 0, 1, 0});
  EXPECT_LT(noiseless.TermEnergy(4, p, {}), 1e-26);
  // Isophotes measured by differencing the image carry an O(spacing^2) error.
  const SfsEnergy measured(observed, light, {0, 1, 0, 0, 1, 0});
  const double blob = measured.TermEnergy(4, Flatten(ReconstructionState::FromPatch(Blob(16), grid)), {});
  EXPECT_LT(measured.TermEnergy(4, p, {}), 1e-3 * blob);
}

TEST(SfsEnergyTest, ExplodingSlopesAreReported) {
  const SamplingGrid grid = Square(5);
  const LightModel light = LightAt(0, 0);
  const SfsEnergy energy(Observe(Render(Blob(5), grid, light, ClampMode::kNone)), light, IntensityProfile());
  ReconstructionState s = ReconstructionState::Flat(grid);
  s.g[12] = Vec2(std::numeric_limits<double>::infinity(), 0.0);
  try {
    energy.EnergyAndGradient(s, nullptr);
    FAIL() << "expected NonFiniteEnergy";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteEnergy);
  }
}

TEST(SfsEnergyTest, RejectsInvalidWeights) {
  EXPECT_THROW((EnergyWeights{0, 0, 1, 1, 1, 1}.Validate()), Error);
  EXPECT_THROW((EnergyWeights{1, 0, -1, 0, 0, 0}.Validate()), Error);
  EXPECT_NO_THROW(GradientCylProfile().Validate());
  SolverConfig cfg;
  cfg.lbfgs_memory = 2;
  EXPECT_THROW(cfg.Validate(), Error);
}

TEST(ReconstructTest, EnergyTraceIsMonotoneAndDeterministic) {
  const SamplingGrid grid = Square(20);
  const MongePatch patch = Blob(20);
  const LightModel light = LightAt(25, 90);
  const Observation obs = Observe(Render(patch, grid, light, ClampMode::kNone));
  SolverConfig cfg;
  cfg.max_iters = 60;
  const ReconstructionResult a = Reconstruct(obs, light, IntensityProfile(), cfg, &patch);
  const ReconstructionResult b = Reconstruct(obs, light, IntensityProfile(), cfg, &patch);
  ASSERT_GT(a.energy_trace.size(), 2u);
  for (size_t k = 1; k < a.energy_trace.size(); ++k) EXPECT_LE(a.energy_trace[k], a.energy_trace[k - 1]);
  EXPECT_EQ(a.energy_trace, b.energy_trace);
  EXPECT_EQ(a.per_iter_ang_err.size(), a.energy_trace.size());
  EXPECT_LT(a.mean_ang_err_deg, a.per_iter_ang_err.front());
}

TEST(ReconstructTest, IdentityStartStaysPut) {
  const SamplingGrid grid = Square(20);
  const MongePatch patch = Blob(20);
  const LightModel light = LightAt(30, 200);
  const Observation obs = Observe(Render(patch, grid, light, ClampMode::kNone));
  const ReconstructionState truth = ReconstructionState::FromPatch(patch, grid);
  const ReconstructionResult r = Reconstruct(obs, light, {4, 0, 0, 0, 0, 0}, SolverConfig{}, &patch, &truth);
  EXPECT_LE(r.iterations, 3);
  EXPECT_LT(r.mean_ang_err_deg, 1e-6);
}

TEST(ReconstructTest, GradientMatchingBeatsIntensityUnderPerturbedLight) {
  // First shape and light of the default corpus, light tilted toward the viewer.
  const ExperimentConfig cfg = DefaultConfig();
  const MongePatch patch = cfg.Shapes()[0];
  const LightModel light = cfg.Light(0);
  const Observation obs = Observe(Render(patch, cfg.Grid(), light, ClampMode::kNone));
  const LightModel assumed = PerturbLight(light, 22.5, PerturbDirection::kTowardViewer).light;
  const ReconstructionResult by_intensity = Reconstruct(obs, assumed, IntensityProfile(), cfg.solver, &patch);
  const ReconstructionResult by_gradient = Reconstruct(obs, assumed, GradientCylProfile(), cfg.solver, &patch);
  EXPECT_LT(by_gradient.mean_ang_err_deg, by_intensity.mean_ang_err_deg);
}

TEST(AngularErrorTest, TruthScoresZero) {
  const SamplingGrid grid = Square(9);
  const MongePatch patch = Blob(9);
  const AngularError err = AngularErrorAgainst(ReconstructionState::FromPatch(patch, grid), patch);
  EXPECT_LT(err.mean_deg, 1e-6);
  EXPECT_LT(err.median_deg, 1e-6);
  EXPECT_TRUE(std::isnan(err.per_node_deg[0]));
}

TEST(AngularErrorTest, RotatedTruthScoresTheRotationAngle) {
  const SamplingGrid grid = Square(15);
  // Normals of a height varying in x alone lie in the xz-plane, so rotating
  // them about y moves each by exactly the rotation angle.
  const MongePatch patch = MongePatch::Analytic({}, {Vec2(7, 0), 0.0, Vec2(0.2, 0.0), Mat2{{0.1, 0}, {0, 0}}, {}});
  const Mat3 rot = Eigen::AngleAxisd(10.0 * kDeg, Vec3::UnitY()).toRotationMatrix();
  ReconstructionState s = ReconstructionState::Flat(grid);
  for (int k = 0; k < grid.size(); ++k) {
    const Vec3 n = rot * patch.Normal(grid.Node(k % grid.width, k / grid.width));
    s.g[k] = Vec2(-n.x() / n.z(), -n.y() / n.z());
  }
  const AngularError err = AngularErrorAgainst(s, patch);
  EXPECT_NEAR(err.mean_deg, 10.0, 1e-9);
  EXPECT_NEAR(err.median_deg, 10.0, 1e-9);
}

TEST(AngularErrorTest, FlatStateAgainstParaboloidMatchesBruteForce) {
  const SamplingGrid grid{11, 11, 0.2, Vec2(-1.0, -1.0)};
  const MongePatch bowl = MongePatch::Analytic({}, {Vec2::Zero(), 0.0, Vec2::Zero(), Mat2::Identity(), {}});
  const AngularError err = AngularErrorAgainst(ReconstructionState::Flat(grid), bowl);
  std::vector<double> expected;
  for (int j = 1; j < 10; ++j) {
    for (int i = 1; i < 10; ++i) {
      const double x = -1.0 + 0.2 * i, y = -1.0 + 0.2 * j;
      expected.push_back(std::acos(1.0 / std::sqrt(1.0 + x * x + y * y)) / kDeg);
    }
  }
  double mean = 0.0;
  for (double v : expected) mean += v;
  mean /= expected.size();
  std::nth_element(expected.begin(), expected.begin() + 40, expected.end());
  EXPECT_NEAR(err.mean_deg, mean, 1e-10);
  EXPECT_NEAR(err.median_deg, expected[40], 1e-10);
}

TEST(PerturbLightTest, TowardViewerFromZenith) {
  const PerturbedLight p = PerturbLight({Vec3::UnitZ(), 0.5}, 22.5, PerturbDirection::kTowardViewer);
  EXPECT_NEAR(p.light.l.x(), -std::sin(22.5 * kDeg), 1e-15);
  EXPECT_NEAR(p.light.l.y(), 0.0, 1e-15);
  EXPECT_NEAR(p.light.l.z(), std::cos(22.5 * kDeg), 1e-15);
  EXPECT_NEAR(p.light.l.norm(), 1.0, 1e-15);
  EXPECT_EQ(p.light.ambient, 0.5);
}

TEST(PerturbLightTest, ClockwiseQuarterTurn) {
  const PerturbedLight p = PerturbLight({Vec3::UnitX(), 0.0}, 90.0, PerturbDirection::kClockwise);
  EXPECT_LT((p.light.l - Vec3(0, -1, 0)).norm(), 1e-15);
  EXPECT_FALSE(p.degenerate_axis);
}

TEST(PerturbLightTest, RotationAboutViewAxisOfZenithLightIsFlagged) {
  const PerturbedLight p = PerturbLight({Vec3(0, 0, 2), 0.0}, 22.5, PerturbDirection::kCounterClockwise);
  EXPECT_TRUE(p.degenerate_axis);
  EXPECT_EQ(p.light.l, Vec3(0, 0, 2));
}

TEST(PerturbLightTest, TowardAndAwayTurnByTheRequestedAngle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 l = 1.7 * testing::RandomUnit(rng);
    for (auto dir : {PerturbDirection::kTowardViewer, PerturbDirection::kAwayFromViewer}) {
      const Vec3 out = PerturbLight({l, 0.0}, 22.5, dir).light.l;
      EXPECT_NEAR(out.norm(), l.norm(), 1e-12);
      const double angle = std::atan2(l.cross(out).norm(), l.dot(out)) / kDeg;
      EXPECT_NEAR(angle, 22.5, 1e-10);
      EXPECT_NEAR(out.dot(Vec3::UnitZ().cross(l)), 0.0, 1e-12);  // stays in span(l, z)
    }
    const Vec3 toward = PerturbLight({l, 0.0}, 10.0, PerturbDirection::kTowardViewer).light.l;
    if (std::abs(l.z()) < 0.95 * l.norm()) EXPECT_GT(toward.z() / toward.norm(), l.z() / l.norm());
  }
}

TEST(IntegrateDepthTest, RecoversAParaboloidUpToAConstant) {
  const SamplingGrid grid{21, 17, 0.1, Vec2(-1.0, -0.8)};
  const MongePatch bowl =
      MongePatch::Analytic({}, {Vec2::Zero(), 0.0, Vec2(0.3, -0.2), Mat2{{1.0, 0.2}, {0.2, -0.5}}, {}});
  const std::vector<double> depth = IntegrateDepth(ReconstructionState::FromPatch(bowl, grid));
  std::vector<double> truth(grid.size());
  double mean = 0.0;
  for (int k = 0; k < grid.size(); ++k) mean += truth[k] = bowl.Height(grid.Node(k % grid.width, k / grid.width));
  mean /= grid.size();
  for (int k = 0; k < grid.size(); ++k) EXPECT_NEAR(depth[k], truth[k] - mean, 1e-12);
}

}  // namespace
}  // namespace patchshade
