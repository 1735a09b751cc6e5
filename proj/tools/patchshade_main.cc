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


// Command-line driver: rendering, density and classification queries,
// single reconstructions and the perturbed-light experiment sweep.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "patchshade/error.h"
#include "patchshade/experiment.h"
#include "patchshade/image_io.h"
#include "patchshade/shading_stats.h"
#include "patchshade/sfs_solver.h"

namespace ps = patchshade;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kBadArguments = 2;

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool json = false;
};

ps::ExperimentConfig ResolveConfig(const GlobalOptions& g) {
  ps::ExperimentConfig cfg = g.config_path.empty() ? ps::DefaultConfig() : ps::LoadConfig(g.config_path);
  if (g.seed) {
    cfg.corpus.seed = *g.seed;
    cfg.solver.seed = *g.seed;
  }
  return cfg;
}

void MakeOutDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ps::Error(ps::ErrorCode::kIo, "cannot create " + dir + ": " + ec.message());
}

void Print(const json& j) { std::cout << j.dump(2) << "\n"; }

struct FrameFlags {
  double sigma = 0, tau = 0, k1 = 0, k2 = 0, phi = 0, f = 0, g = 0, h = 0, i = 0;

  void Attach(CLI::App* cmd) {
    cmd->set_help_flag("--help", "Print this help message and exit");  // frees --h
    cmd->add_option("--sigma", sigma, "slant (radians)");
    cmd->add_option("--tau", tau, "tilt (radians)");
    cmd->add_option("--k1", k1, "first principal curvature");
    cmd->add_option("--k2", k2, "second principal curvature");
    cmd->add_option("--phi", phi, "principal direction angle (radians)");
    cmd->add_option("--f", f, "d kappa1 / ds");
    cmd->add_option("--g", g, "d kappa1 / dt");
    cmd->add_option("--h", h, "d kappa2 / ds");
    cmd->add_option("--i", i, "d kappa2 / dt");
  }

  ps::LocalSurfaceFrame Frame() const {
    ps::LocalSurfaceFrame fr;
    fr.slant = sigma;
    fr.tilt = tau;
    fr.kappa1 = k1;
    fr.kappa2 = k2;
    fr.phi = phi;
    fr.dk1_ds = f;
    fr.dk1_dt = g;
    fr.dk2_ds = h;
    fr.dk2_dt = i;
    return fr;
  }
};

struct DensityFlags {
  FrameFlags frame;
  double gx = 0, gy = 0;
  std::optional<double> hxx, hxy, hyy;
  std::string dist = "uniform-sphere";
  std::vector<double> mean = {0, 0, 1};
  double concentration = 1.0;
  std::optional<double> r_min, r_max;
  std::string quantity = "gradient";
};

ps::LightDistribution MakeDistribution(const DensityFlags& d) {
  ps::LightDistribution dist = ps::LightDistribution::UniformSphere();
  if (d.dist == "upper-hemisphere") {
    dist = ps::LightDistribution::UniformUpperHemisphere();
  } else if (d.dist == "von-mises") {
    dist = ps::LightDistribution::VonMisesLike(ps::Vec3(d.mean[0], d.mean[1], d.mean[2]), d.concentration);
  }
  if (d.r_min || d.r_max) {
    if (!d.r_min || !d.r_max) throw ps::Error(ps::ErrorCode::kInvalidArgument, "--rmin and --rmax go together");
    dist = dist.WithShell(*d.r_min, *d.r_max);
  }
  return dist;
}

int RunDensity(const DensityFlags& d, const GlobalOptions& g) {
  const ps::LocalSurfaceFrame fr = d.frame.Frame();
  const ps::LightDistribution dist = MakeDistribution(d);
  const ps::Vec2 grad(d.gx, d.gy);
  const bool has_hessian = d.hxx || d.hxy || d.hyy;
  if (d.quantity != "gradient" && !has_hessian) {
    throw ps::Error(ps::ErrorCode::kInvalidArgument, "--quantity " + d.quantity + " needs --hxx/--hxy/--hyy");
  }
  const ps::Mat2 hess{{d.hxx.value_or(0), d.hxy.value_or(0)}, {d.hxy.value_or(0), d.hyy.value_or(0)}};
  double value = 0.0;
  bool in_support = true;
  try {
    if (d.quantity == "gradient") {
      value = ps::GradientDensity(grad, fr, dist);
    } else if (d.quantity == "hessian") {
      value = ps::HessianDensity(hess, fr, dist);
    } else {
      value = ps::JointDensity(grad, hess, fr, dist);
    }
  } catch (const ps::Error& e) {
    // Frames the density is undefined for are a usage error; derivatives no
    // light can produce simply have zero density.
    if (e.code() == ps::ErrorCode::kRankDeficient || e.code() == ps::ErrorCode::kDegenerate) {
      throw ps::Error(ps::ErrorCode::kInvalidArgument, e.what());
    }
    if (e.code() != ps::ErrorCode::kOutOfSupport) throw;
    in_support = false;
  }
  if (g.json) {
    Print({{"quantity", d.quantity}, {"distribution", d.dist}, {"density", value}, {"in_support", in_support}});
  } else {
    std::printf("%s density: %.6g%s\n", d.quantity.c_str(), value, in_support ? "" : " (outside the support)");
  }
  return kOk;
}

int RunClassify(const FrameFlags& f, const GlobalOptions& g) {
  const ps::Rank1Class c = ps::ClassifyRank1(f.Frame());
  if (g.json) {
    json j = {{"tag", ps::Rank1TagName(c.tag)}, {"numerical_rank", c.numerical_rank}, {"conditions", c.conditions}};
    j["case3_ratio"] = std::isfinite(c.case3_ratio) ? json(c.case3_ratio) : json(nullptr);
    Print(j);
  } else {
    std::printf("%s (numerical rank %d)\n", ps::Rank1TagName(c.tag), c.numerical_rank);
    for (const std::string& cond : c.conditions) std::printf("  %s\n", cond.c_str());
  }
  return kOk;
}

int RunRender(const GlobalOptions& g) {
  const ps::ExperimentConfig cfg = ResolveConfig(g);
  MakeOutDir(g.out_dir);
  std::vector<std::vector<ps::GaussianBump>> shapes = cfg.shapes;
  if (shapes.empty()) {
    for (int k = 0; k < cfg.corpus.count; ++k) shapes.push_back(ps::GenerateShape(cfg.corpus, k, cfg.grid_size));
  }
  ps::WriteShapeSpecs(g.out_dir + "/shapes.csv", shapes);
  const std::vector<std::string> files = ps::RenderAll(cfg, g.out_dir);
  const size_t images = files.size() / 3;
  if (g.json) {
    Print({{"images", images}, {"files", files}});
  } else {
    std::printf("rendered %zu images into %s\n", images, g.out_dir.c_str());
  }
  return kOk;
}

struct ReconstructFlags {
  int shape = 0;
  int light = 0;
  std::string perturbation = "none";
  std::string profile = "gradient";
  std::string image;
};

int RunReconstruct(const ReconstructFlags& r, const GlobalOptions& g) {
  const ps::ExperimentConfig cfg = ResolveConfig(g);
  const ps::NamedProfile* profile = nullptr;
  for (const ps::NamedProfile& p : cfg.profiles) {
    if (p.name == r.profile) profile = &p;
  }
  if (!profile) throw ps::Error(ps::ErrorCode::kInvalidArgument, "no profile named " + r.profile);

  std::optional<ps::MongePatch> truth;
  ps::RenderedImage image;
  if (!r.image.empty()) {
    image = ps::ReadImageSidecar(r.image);
  } else {
    const std::vector<ps::MongePatch> shapes = cfg.Shapes();
    if (r.shape < 0 || r.shape >= static_cast<int>(shapes.size()) || r.light < 0 ||
        r.light >= static_cast<int>(cfg.lights.size())) {
      throw ps::Error(ps::ErrorCode::kInvalidArgument, "shape or light index out of range");
    }
    truth = shapes[r.shape];
    image = ps::Render(*truth, cfg.Grid(), cfg.Light(r.light), ps::ClampMode::kNone);
  }
  ps::LightModel assumed = image.light;
  if (r.perturbation != "none") {
    bool found = false;
    for (auto dir : {ps::PerturbDirection::kTowardViewer, ps::PerturbDirection::kAwayFromViewer,
                     ps::PerturbDirection::kClockwise, ps::PerturbDirection::kCounterClockwise}) {
      if (r.perturbation == ps::PerturbDirectionName(dir)) {
        assumed = ps::PerturbLight(image.light, cfg.perturb_angle_deg, dir).light;
        found = true;
      }
    }
    if (!found) throw ps::Error(ps::ErrorCode::kInvalidArgument, "unknown perturbation " + r.perturbation);
  }

  const ps::ReconstructionResult result =
      ps::Reconstruct(ps::Observe(image), assumed, profile->weights, cfg.solver, truth ? &*truth : nullptr);
  MakeOutDir(g.out_dir);
  {
    std::ofstream out(g.out_dir + "/trace.csv");
    if (!out) throw ps::Error(ps::ErrorCode::kIo, "cannot write " + g.out_dir + "/trace.csv");
    ps::WriteTraceCsv(out, result);
  }
  ps::WriteNormalMapPng(g.out_dir + "/normals.png", result.state);
  ps::WriteDepthMapPng(g.out_dir + "/depth.png", result.state);

  if (g.json) {
    json j = {{"iterations", result.iterations},
              {"energy", result.energy_trace.back()},
              {"termination", result.termination},
              {"line_search_failure", result.line_search_failure}};
    if (truth) {
      j["mean_ang_err_deg"] = result.mean_ang_err_deg;
      j["median_ang_err_deg"] = result.median_ang_err_deg;
    }
    Print(j);
  } else {
    std::printf("%d iterations, energy %.6g (%s)\n", result.iterations, result.energy_trace.back(),
                result.termination.c_str());
    if (truth) {
      std::printf("angular error: mean %.3f deg, median %.3f deg\n", result.mean_ang_err_deg,
                  result.median_ang_err_deg);
    }
  }
  return result.line_search_failure ? kRunFailure : kOk;
}

int RunExperiment(const GlobalOptions& g) {
  const ps::ExperimentConfig cfg = ResolveConfig(g);
  MakeOutDir(g.out_dir);
  {
    std::ofstream out(g.out_dir + "/config.ini");
    out << ps::FormatConfig(cfg);
  }
  std::vector<std::vector<ps::GaussianBump>> shapes = cfg.shapes;
  if (shapes.empty()) {
    for (int k = 0; k < cfg.corpus.count; ++k) shapes.push_back(ps::GenerateShape(cfg.corpus, k, cfg.grid_size));
  }
  ps::WriteShapeSpecs(g.out_dir + "/shapes.csv", shapes);

  const ps::ExperimentReport report = ps::RunExperiment(cfg, g.threads, [](const ps::RunOutcome& r) {
    std::fprintf(stderr, "shape %d light %d %-6s %-14s %s", r.key.shape, r.key.light, r.key.perturbation.c_str(),
                 r.key.profile.c_str(), r.ok ? "" : "FAILED ");
    if (r.ok) std::fprintf(stderr, "mean %.2f deg (%.1fs)", r.mean_ang_err_deg, r.seconds);
    if (!r.error.empty()) std::fprintf(stderr, " %s", r.error.c_str());
    std::fprintf(stderr, "\n");
  });
  const std::vector<ps::SummaryRow> rows = ps::Summarize(cfg, report);
  {
    std::ofstream out(g.out_dir + "/long.csv");
    ps::WriteLongCsv(out, report);
    std::ofstream sum(g.out_dir + "/summary.csv");
    ps::WriteSummaryCsv(sum, rows);
    if (!out || !sum) throw ps::Error(ps::ErrorCode::kIo, "failed writing CSV reports in " + g.out_dir);
  }
  ps::WriteErrorPlots(cfg, report, g.out_dir);

  if (g.json) {
    json j = json::array();
    for (const ps::SummaryRow& r : rows) {
      j.push_back({{"condition", r.condition}, {"profile", r.profile}, {"runs", r.runs},
                   {"mean_ang_err_deg", r.mean_ang_err_deg}, {"median_ang_err_deg", r.median_ang_err_deg}});
    }
    Print({{"summary", j}, {"failures", report.failures}});
  } else {
    std::printf("%-10s %-14s %5s %10s %10s\n", "condition", "profile", "runs", "mean", "median");
    for (const ps::SummaryRow& r : rows) {
      std::printf("%-10s %-14s %5d %10.3f %10.3f\n", r.condition.c_str(), r.profile.c_str(), r.runs,
                  r.mean_ang_err_deg, r.median_ang_err_deg);
    }
    if (report.failures) std::printf("%d runs failed\n", report.failures);
  }
  return report.failures ? kRunFailure : kOk;
}

int RunConfig(bool smoke, const GlobalOptions& g) {
  if (!g.config_path.empty()) {
    std::cout << ps::FormatConfig(ResolveConfig(g));
  } else {
    std::cout << ps::FormatConfig(smoke ? ps::SmokeConfig() : ps::DefaultConfig());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local shape statistics and shape-from-shading experiments"};
  app.require_subcommand(1);
  GlobalOptions global;
  app.add_option("--config", global.config_path, "experiment config (INI)")->check(CLI::ExistingFile);
  app.add_option("--out", global.out_dir, "output directory");
  app.add_option("--seed", global.seed, "overrides the shape and solver seeds");
  app.add_option("--threads", global.threads, "worker threads for the sweep")->check(CLI::PositiveNumber);
  app.add_flag("--json", global.json, "machine-readable output");
  app.fallthrough();

  CLI::App* render = app.add_subcommand("render", "render every shape under every light");

  DensityFlags density;
  CLI::App* density_cmd = app.add_subcommand("density", "likelihood of image derivatives given a local frame");
  density.frame.Attach(density_cmd);
  density_cmd->add_option("--gx", density.gx, "image gradient x");
  density_cmd->add_option("--gy", density.gy, "image gradient y");
  density_cmd->add_option("--hxx", density.hxx, "image Hessian xx");
  density_cmd->add_option("--hxy", density.hxy, "image Hessian xy");
  density_cmd->add_option("--hyy", density.hyy, "image Hessian yy");
  density_cmd->add_option("--dist", density.dist, "light direction law")
      ->check(CLI::IsMember({"uniform-sphere", "upper-hemisphere", "von-mises"}));
  density_cmd->add_option("--mean", density.mean, "von-mises mean direction")->expected(3);
  density_cmd->add_option("--concentration", density.concentration, "von-mises concentration");
  density_cmd->add_option("--rmin", density.r_min, "inner radius of a shell radial law");
  density_cmd->add_option("--rmax", density.r_max, "outer radius of a shell radial law");
  density_cmd->add_option("--quantity", density.quantity, "which density")
      ->check(CLI::IsMember({"gradient", "hessian", "joint"}));

  FrameFlags classify;
  CLI::App* classify_cmd = app.add_subcommand("classify", "rank-1 taxonomy of a local frame");
  classify.Attach(classify_cmd);

  ReconstructFlags recon;
  CLI::App* recon_cmd = app.add_subcommand("reconstruct", "one reconstruction with trace and maps");
  recon_cmd->add_option("--shape", recon.shape, "shape index");
  recon_cmd->add_option("--light", recon.light, "light index");
  recon_cmd->add_option("--perturb", recon.perturbation, "none, toward, away, cw or ccw");
  recon_cmd->add_option("--profile", recon.profile, "weight profile name");
  recon_cmd->add_option("--image", recon.image, "observed image sidecar instead of a config shape")
      ->check(CLI::ExistingFile);

  CLI::App* experiment = app.add_subcommand("experiment", "perturbed-light sweep with CSV and plots");

  bool smoke = false;
  CLI::App* config_cmd = app.add_subcommand("config", "print a configuration");
  config_cmd->add_flag("--print-defaults", "print the built-in defaults (the default action)");
  config_cmd->add_flag("--smoke", smoke, "print the smoke-test configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadArguments;
  }

  try {
    if (render->parsed()) return RunRender(global);
    if (density_cmd->parsed()) return RunDensity(density, global);
    if (classify_cmd->parsed()) return RunClassify(classify, global);
    if (recon_cmd->parsed()) return RunReconstruct(recon, global);
    if (experiment->parsed()) return RunExperiment(global);
    if (config_cmd->parsed()) return RunConfig(smoke, global);
  } catch (const ps::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == ps::ErrorCode::kInvalidArgument ? kBadArguments : kRunFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRunFailure;
  }
  return kBadArguments;
}
