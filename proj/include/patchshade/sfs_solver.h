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

#ifndef PATCHSHADE_SFS_SOLVER_H_
#define PATCHSHADE_SFS_SOLVER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "patchshade/renderer.h"
#include "patchshade/shading_stats.h"
#include "patchshade/surface_geometry.h"

namespace patchshade {

// Latent surface slopes g = (dh/dx, dh/dy) on the nodes of `grid`. The outer
// ring of nodes is the boundary, the rest the interior.
struct ReconstructionState {
  SamplingGrid grid;
  std::vector<Vec2> g;

  static ReconstructionState Flat(const SamplingGrid& grid);
  // Exact slopes of a patch at the grid nodes.
  static ReconstructionState FromPatch(const MongePatch& patch, const SamplingGrid& grid);

  Vec3 Normal(int index) const;
};

struct EnergyWeights {
  double intensity = 0.0;
  double gradient = 0.0;
  double integrability = 0.0;
  double flatness = 0.0;
  double cylindricity = 0.0;
  double boundary = 0.0;

  // Throws kInvalidArgument for negative or non-finite weights, or when both
  // data weights are zero.
  void Validate() const;
};

// Intensity matching: wI = 4, wInt = 150, wFlat = 0.001, wB = 0.05.
EnergyWeights IntensityProfile();
// Gradient matching: wGradI = 100, wInt = 150, wFlat = 0.001, wB = 0.05.
EnergyWeights GradientProfile();
// Gradient matching plus wCyl = 10.
EnergyWeights GradientCylProfile();

// Image data in the form the energy consumes.
struct Observation {
  RenderedImage image;
  // Central-difference gradients at interior nodes, zero on the boundary.
  std::vector<Vec2> gradients;
  // Unit isophote directions where |grad I| exceeds the tolerance, else zero.
  std::vector<Vec2> isophotes;
};

// grad_tol < 0 selects DefaultGradTol(image).
Observation Observe(const RenderedImage& image, double grad_tol = -1.0);

struct EnergyTerms {
  double intensity = 0.0;
  double gradient = 0.0;
  double integrability = 0.0;
  double flatness = 0.0;
  double cylindricity = 0.0;
  double boundary = 0.0;
  double total = 0.0;  // weighted sum
};

// E(g) = sum_k w_k phi_k(g) on a grid domain. Slopes along x and y come from
// central differences of g at interior nodes; phi_I and phi_flat sum over
// all nodes, phi_b over boundary nodes, the rest over interior nodes:
//   phi_I    = (I - l.n - ambient)^2
//   phi_gI   = |grad I - Dg^T grad_g(l.n)|^2      (= |grad I - l^T Dn|^2)
//   phi_int  = (dp/dy - dq/dx)^2
//   phi_flat = |g|^2
//   phi_b    = (1 - t.b)^2, t = -g / sqrt(|g|^2 + eps^2), b outward
//   phi_cyl  = |Dn t_iso|^2
class SfsEnergy {
 public:
  SfsEnergy(Observation observation, LightModel assumed_light, EnergyWeights weights,
            double boundary_smoothing = 0.05);

  int NumParameters() const { return 2 * observation_.image.grid.size(); }
  const SamplingGrid& grid() const { return observation_.image.grid; }
  const EnergyWeights& weights() const { return weights_; }

  // Parameters are (p, q) per node in row-major node order. When `gradient`
  // is non-empty it receives dE/dparams. Returns per-term values; the total
  // may be non-finite.
  EnergyTerms Evaluate(std::span<const double> params, std::span<double> gradient) const;

  // Evaluate() that throws kNonFiniteEnergy when the total is not finite.
  double EnergyAndGradient(const ReconstructionState& state, std::vector<Vec2>* gradient) const;

  // Weighted value of a single term (0..5 in EnergyTerms order) and its
  // gradient, for testing each term on its own.
  double TermEnergy(int term, std::span<const double> params, std::span<double> gradient) const;

 private:
  EnergyTerms EvaluateWeighted(std::span<const double> params, std::span<double> gradient,
                               const EnergyWeights& w) const;

  Observation observation_;
  LightModel light_;
  EnergyWeights weights_;
  double smoothing_;
};

struct SolverConfig {
  int lbfgs_memory = 10;
  int max_iters = 500;
  double grad_norm_tol = 1e-8;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  // Seeds the optional jitter of the flat start.
  std::uint64_t seed = 1;
  double init_jitter = 0.0;

  void Validate() const;
};

struct AngularError {
  double mean_deg = 0.0;
  double median_deg = 0.0;
  // One entry per node; boundary nodes hold NaN and are excluded from the
  // statistics.
  std::vector<double> per_node_deg;
};

AngularError AngularErrorAgainst(const ReconstructionState& state, const MongePatch& truth);
AngularError AngularErrorAgainst(const ReconstructionState& state, const ReconstructionState& truth);

struct IterationRecord {
  int iteration = 0;
  EnergyTerms terms;
  double mean_ang_err_deg = 0.0;    // NaN without ground truth
  double median_ang_err_deg = 0.0;  // NaN without ground truth
};

struct ReconstructionResult {
  ReconstructionState state;
  EnergyWeights weights;
  std::vector<double> energy_trace;
  std::vector<IterationRecord> trace;
  double mean_ang_err_deg = 0.0;
  double median_ang_err_deg = 0.0;
  std::vector<double> per_iter_ang_err;
  bool line_search_failure = false;
  std::string termination;
  int iterations = 0;
};

// L-BFGS from g = 0 (or `init`). Angular errors are recorded per iteration
// when `truth` is given.
ReconstructionResult Reconstruct(const Observation& observed, const LightModel& assumed_light,
                                 const EnergyWeights& weights, const SolverConfig& cfg,
                                 const MongePatch* truth = nullptr,
                                 const ReconstructionState* init = nullptr);

enum class PerturbDirection { kTowardViewer, kAwayFromViewer, kClockwise, kCounterClockwise };

const char* PerturbDirectionName(PerturbDirection dir);

struct PerturbedLight {
  LightModel light;
  // Set when a rotation about the view axis was asked of a light along it.
  bool degenerate_axis = false;
};

// Rotates l by angle_deg, preserving |l| and the ambient term. Toward/Away
// rotate in the plane of l and the view axis z, towards or away from z; for
// l parallel to z that plane is taken to contain x, and "toward" tilts to -x.
// Clockwise/CounterClockwise rotate about z as seen by the viewer (looking
// down -z), so clockwise by 90 degrees maps x to -y.
PerturbedLight PerturbLight(const LightModel& light, double angle_deg, PerturbDirection dir);

// Least-squares integration of the slopes (trapezoidal differences) with the
// mean height fixed at zero.
std::vector<double> IntegrateDepth(const ReconstructionState& state);

}  // namespace patchshade

#endif  // PATCHSHADE_SFS_SOLVER_H_
