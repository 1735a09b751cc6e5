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


#ifndef PATCHSHADE_EXPERIMENT_H_
#define PATCHSHADE_EXPERIMENT_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "patchshade/renderer.h"
#include "patchshade/sfs_solver.h"
#include "patchshade/surface_geometry.h"

namespace patchshade {

// Random sums of Gaussian bumps. Widths are fractions of the grid extent;
// the peak slope of each bump is drawn from [min_slope, max_slope].
struct ShapeCorpus {
  int count = 3;
  std::uint64_t seed = 100;
  int min_bumps = 2;
  int max_bumps = 5;
  double center_margin = 0.25;
  double min_width = 0.08;
  double max_width = 0.16;
  double min_slope = 0.3;
  double max_slope = 0.6;
  double dent_probability = 0.25;
};

struct LightDirection {
  double polar_deg = 0.0;
  double azimuth_deg = 0.0;

  Vec3 Unit() const;
};

struct NamedProfile {
  std::string name;
  EnergyWeights weights;
};

struct ExperimentConfig {
  int grid_size = 64;
  double spacing = 1.0;
  ShapeCorpus corpus;
  // Explicit shapes replace the generated corpus when non-empty.
  std::vector<std::vector<GaussianBump>> shapes;
  std::vector<LightDirection> lights;
  // Hemispheric lighting: I = irradiance * (d . n) + ambient.
  double irradiance = 0.5;
  double ambient = 0.5;
  double perturb_angle_deg = 22.5;
  bool known_light_baselines = true;
  std::vector<NamedProfile> profiles;
  SolverConfig solver;

  // Throws kInvalidArgument on an unusable configuration.
  void Validate() const;

  SamplingGrid Grid() const;
  LightModel Light(int index) const;
  std::vector<MongePatch> Shapes() const;
};

ExperimentConfig DefaultConfig();
// 16x16 grid, 50 iterations, one shape and two lights.
ExperimentConfig SmokeConfig();

// INI text with sections [grid], [shapes], [lights], [perturbation],
// [solver] and one [profile.<name>] per weight profile. Keys missing from
// the file keep the defaults.
ExperimentConfig ParseConfig(std::istream& in);
ExperimentConfig LoadConfig(const std::string& path);
std::string FormatConfig(const ExperimentConfig& cfg);

std::vector<GaussianBump> GenerateShape(const ShapeCorpus& corpus, int index, int grid_size);

// One line per bump: shape, center_x, center_y, amplitude, width.
void WriteShapeSpecs(const std::string& path, const std::vector<std::vector<GaussianBump>>& shapes);

// Renders every shape under every light into `out_dir` as
// shape{i}_light{j}.{pgm,txt,png}. Returns the written paths.
std::vector<std::string> RenderAll(const ExperimentConfig& cfg, const std::string& out_dir);

struct RunKey {
  int shape = 0;
  int light = 0;
  std::string perturbation;  // "none" for the known-light baseline
  std::string profile;
};

struct RunOutcome {
  RunKey key;
  bool ok = false;
  std::string error;
  std::vector<IterationRecord> trace;
  double mean_ang_err_deg = 0.0;
  double median_ang_err_deg = 0.0;
  double seconds = 0.0;
};

struct ExperimentReport {
  std::vector<RunOutcome> runs;  // config order
  int failures = 0;
};

using ProgressFn = std::function<void(const RunOutcome&)>;

// Runs shape x light x (baseline + 4 perturbations) x profile. Runs are
// spread over `threads` workers and gathered in config order; failed runs
// are recorded and the sweep continues.
ExperimentReport RunExperiment(const ExperimentConfig& cfg, int threads = 1, const ProgressFn& progress = {});

struct SummaryRow {
  std::string condition;  // "known" or "perturbed"
  std::string profile;
  int runs = 0;
  double mean_ang_err_deg = 0.0;
  double median_ang_err_deg = 0.0;
};

// Final errors averaged over shapes and lights, rows ordered by condition
// then by the configured profile order.
std::vector<SummaryRow> Summarize(const ExperimentConfig& cfg, const ExperimentReport& report);

inline constexpr const char* kLongCsvSchema = "patchshade-long/1";
inline constexpr const char* kSummaryCsvSchema = "patchshade-summary/1";

void WriteLongCsv(std::ostream& out, const ExperimentReport& report);
void WriteSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows);

// One error-vs-iteration chart per shape x light. Returns the written paths.
std::vector<std::string> WriteErrorPlots(const ExperimentConfig& cfg, const ExperimentReport& report,
                                         const std::string& out_dir);

// Per-iteration trace of a single reconstruction: iteration, energy, each
// term, mean and median angular error.
void WriteTraceCsv(std::ostream& out, const ReconstructionResult& result);

// Normal map as RGB with (n + 1) / 2 per channel, and depth from
// IntegrateDepth stretched to 8 bits.
void WriteNormalMapPng(const std::string& path, const ReconstructionState& state);
void WriteDepthMapPng(const std::string& path, const ReconstructionState& state);

}  // namespace patchshade

#endif  // PATCHSHADE_EXPERIMENT_H_
