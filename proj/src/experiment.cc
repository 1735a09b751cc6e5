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


#include "patchshade/experiment.h"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "patchshade/error.h"
#include "patchshade/image_io.h"
#include "patchshade/shading_stats.h"

namespace patchshade {
namespace {

using boost::property_tree::ptree;

constexpr double kDeg = std::numbers::pi / 180.0;

constexpr PerturbDirection kDirections[] = {PerturbDirection::kTowardViewer, PerturbDirection::kAwayFromViewer,
                                            PerturbDirection::kClockwise, PerturbDirection::kCounterClockwise};

void Require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> ParseList(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    Require(used == token.size(), "bad number '" + token + "' in " + key);
    out.push_back(v);
  }
  return out;
}

std::string JoinList(const std::vector<double>& values) {
  std::string out;
  for (size_t k = 0; k < values.size(); ++k) out += (k ? " " : "") + Num(values[k]);
  return out;
}

template <typename T>
void Read(const ptree& tree, const std::string& path, T& value) {
  try {
    if (auto child = tree.get_child_optional(ptree::path_type(path, '/'))) value = child->get_value<T>();
  } catch (const boost::property_tree::ptree_error& e) {
    throw Error(ErrorCode::kInvalidArgument, "config key " + path + ": " + e.what());
  }
}

EnergyWeights ReadWeights(const ptree& section, const std::string& name) {
  EnergyWeights w;
  const std::map<std::string, double*> keys = {
      {"intensity", &w.intensity},       {"gradient", &w.gradient},         {"integrability", &w.integrability},
      {"flatness", &w.flatness},         {"cylindricity", &w.cylindricity}, {"boundary", &w.boundary}};
  for (const auto& [key, child] : section) {
    auto it = keys.find(key);
    Require(it != keys.end(), "unknown weight '" + key + "' in profile " + name);
    Read(section, key, *it->second);
  }
  w.Validate();
  return w;
}

std::vector<GaussianBump> ParseBumps(const std::string& text, const std::string& key) {
  const std::vector<double> v = ParseList(text, key);
  Require(v.size() % 4 == 0, key + " needs groups of four numbers: center_x center_y amplitude width");
  std::vector<GaussianBump> bumps;
  for (size_t k = 0; k < v.size(); k += 4) bumps.push_back({Vec2(v[k], v[k + 1]), v[k + 2], v[k + 3]});
  return bumps;
}

// Simple raster canvas for the error charts.
class Canvas {
 public:
  Canvas(int width, int height) : width_(width), height_(height), rgb_(3 * width * height, 255) {}

  void Set(int x, int y, const std::array<std::uint8_t, 3>& c) {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
    std::copy(c.begin(), c.end(), rgb_.begin() + 3 * (y * width_ + x));
  }

  void Line(double x0, double y0, double x1, double y1, const std::array<std::uint8_t, 3>& c) {
    const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))));
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      Set(static_cast<int>(std::lround(x0 + t * (x1 - x0))), static_cast<int>(std::lround(y0 + t * (y1 - y0))), c);
    }
  }

  void Save(const std::string& path) const { WritePngRgb(path, width_, height_, rgb_); }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> rgb_;
};

std::array<std::uint8_t, 3> ProfileColor(const std::string& name, bool baseline) {
  std::array<std::uint8_t, 3> c = {110, 110, 110};
  if (name == "intensity") c = {40, 70, 220};
  if (name == "gradient") c = {220, 40, 40};
  if (name == "gradient+cyl") c = {30, 160, 60};
  if (baseline) {
    for (auto& v : c) v = static_cast<std::uint8_t>(v / 2);
  }
  return c;
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  return out;
}

}  // namespace

Vec3 LightDirection::Unit() const {
  const double p = polar_deg * kDeg, a = azimuth_deg * kDeg;
  return Vec3(std::sin(p) * std::cos(a), std::sin(p) * std::sin(a), std::cos(p));
}

void ExperimentConfig::Validate() const {
  Require(grid_size >= 3, "grid size must be at least 3");
  Require(spacing > 0.0 && std::isfinite(spacing), "spacing must be positive");
  if (shapes.empty()) {
    Require(corpus.count >= 1, "need at least one shape");
    Require(corpus.min_bumps >= 0 && corpus.min_bumps <= corpus.max_bumps, "bump counts must satisfy 0 <= min <= max");
    Require(corpus.center_margin >= 0.0 && corpus.center_margin < 0.5, "center margin must lie in [0, 0.5)");
    Require(corpus.min_width > 0.0 && corpus.min_width <= corpus.max_width, "widths must satisfy 0 < min <= max");
    Require(corpus.min_slope >= 0.0 && corpus.min_slope <= corpus.max_slope, "slopes must satisfy 0 <= min <= max");
    Require(corpus.dent_probability >= 0.0 && corpus.dent_probability <= 1.0, "dent probability must lie in [0, 1]");
  }
  Require(!lights.empty(), "need at least one light");
  for (const LightDirection& l : lights) {
    Require(std::isfinite(l.polar_deg) && std::isfinite(l.azimuth_deg), "light angles must be finite");
  }
  Require(irradiance > 0.0 && ambient >= 0.0, "irradiance must be positive and ambient non-negative");
  Require(perturb_angle_deg > 0.0 && perturb_angle_deg < 90.0, "perturbation angle must lie in (0, 90) degrees");
  Require(!profiles.empty(), "need at least one weight profile");
  for (const NamedProfile& p : profiles) {
    Require(!p.name.empty() && p.name.find_first_of(",\n\" ") == std::string::npos,
            "profile names must be non-empty without commas, quotes or spaces");
    p.weights.Validate();
  }
  solver.Validate();
}

SamplingGrid ExperimentConfig::Grid() const { return {grid_size, grid_size, spacing, Vec2::Zero()}; }

LightModel ExperimentConfig::Light(int index) const {
  return LightModel{irradiance * lights.at(index).Unit(), ambient};
}

std::vector<MongePatch> ExperimentConfig::Shapes() const {
  std::vector<MongePatch> out;
  if (!shapes.empty()) {
    for (const auto& bumps : shapes) out.push_back(MongePatch::Analytic(bumps));
    return out;
  }
  for (int k = 0; k < corpus.count; ++k) out.push_back(MongePatch::Analytic(GenerateShape(corpus, k, grid_size)));
  return out;
}

ExperimentConfig DefaultConfig() {
  ExperimentConfig cfg;
  cfg.lights = {{25, 0}, {25, 90}, {25, 180}, {25, 270}, {60, 60}, {60, 90}, {60, 120}};
  cfg.profiles = {{"intensity", IntensityProfile()}, {"gradient", GradientProfile()},
                  {"gradient+cyl", GradientCylProfile()}};
  return cfg;
}

ExperimentConfig SmokeConfig() {
  ExperimentConfig cfg = DefaultConfig();
  cfg.grid_size = 16;
  cfg.corpus.count = 1;
  cfg.lights = {{25, 0}, {60, 90}};
  cfg.solver.max_iters = 50;
  return cfg;
}

ExperimentConfig ParseConfig(std::istream& in) {
  ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("config: ") + e.what());
  }
  ExperimentConfig cfg = DefaultConfig();
  std::vector<NamedProfile> profiles;
  std::map<int, std::vector<GaussianBump>> shapes;
  for (const auto& [section, body] : tree) {
    const std::string where = "[" + section + "]";
    if (section == "grid") {
      Read(body, "size", cfg.grid_size);
      Read(body, "spacing", cfg.spacing);
    } else if (section == "shapes") {
      ShapeCorpus& c = cfg.corpus;
      Read(body, "count", c.count);
      Read(body, "seed", c.seed);
      Read(body, "min_bumps", c.min_bumps);
      Read(body, "max_bumps", c.max_bumps);
      Read(body, "center_margin", c.center_margin);
      Read(body, "min_width", c.min_width);
      Read(body, "max_width", c.max_width);
      Read(body, "min_slope", c.min_slope);
      Read(body, "max_slope", c.max_slope);
      Read(body, "dent_probability", c.dent_probability);
    } else if (section == "lights") {
      std::string polar, azimuth;
      Read(body, "polar_deg", polar);
      Read(body, "azimuth_deg", azimuth);
      if (!polar.empty() || !azimuth.empty()) {
        const std::vector<double> p = ParseList(polar, "polar_deg"), a = ParseList(azimuth, "azimuth_deg");
        Require(p.size() == a.size(), "polar_deg and azimuth_deg need the same length");
        cfg.lights.clear();
        for (size_t k = 0; k < p.size(); ++k) cfg.lights.push_back({p[k], a[k]});
      }
      Read(body, "irradiance", cfg.irradiance);
      Read(body, "ambient", cfg.ambient);
    } else if (section == "perturbation") {
      Read(body, "angle_deg", cfg.perturb_angle_deg);
      Read(body, "known_light_baselines", cfg.known_light_baselines);
    } else if (section == "solver") {
      SolverConfig& s = cfg.solver;
      Read(body, "lbfgs_memory", s.lbfgs_memory);
      Read(body, "max_iters", s.max_iters);
      Read(body, "grad_norm_tol", s.grad_norm_tol);
      Read(body, "wolfe_c1", s.wolfe_c1);
      Read(body, "wolfe_c2", s.wolfe_c2);
      Read(body, "seed", s.seed);
      Read(body, "init_jitter", s.init_jitter);
    } else if (section.rfind("profile.", 0) == 0) {
      const std::string name = section.substr(8);
      profiles.push_back({name, ReadWeights(body, name)});
    } else if (section.rfind("shape.", 0) == 0) {
      int index = -1;
      try {
        index = std::stoi(section.substr(6));
      } catch (const std::exception&) {
      }
      Require(index >= 0, "bad shape section " + where);
      std::string bumps;
      Read(body, "bumps", bumps);
      shapes[index] = ParseBumps(bumps, where);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown config section " + where);
    }
  }
  if (!profiles.empty()) cfg.profiles = profiles;
  for (const auto& [index, bumps] : shapes) {
    Require(index == static_cast<int>(cfg.shapes.size()), "shape sections must be numbered 0, 1, 2, ...");
    cfg.shapes.push_back(bumps);
  }
  cfg.Validate();
  return cfg;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config " + path);
  return ParseConfig(in);
}

std::string FormatConfig(const ExperimentConfig& cfg) {
  std::ostringstream out;
  const ShapeCorpus& c = cfg.corpus;
  out << "[grid]\nsize = " << cfg.grid_size << "\nspacing = " << Num(cfg.spacing) << "\n\n";
  out << "[shapes]\ncount = " << c.count << "\nseed = " << c.seed << "\nmin_bumps = " << c.min_bumps
      << "\nmax_bumps = " << c.max_bumps << "\ncenter_margin = " << Num(c.center_margin)
      << "\nmin_width = " << Num(c.min_width) << "\nmax_width = " << Num(c.max_width)
      << "\nmin_slope = " << Num(c.min_slope) << "\nmax_slope = " << Num(c.max_slope)
      << "\ndent_probability = " << Num(c.dent_probability) << "\n\n";
  std::vector<double> polar, azimuth;
  for (const LightDirection& l : cfg.lights) {
    polar.push_back(l.polar_deg);
    azimuth.push_back(l.azimuth_deg);
  }
  out << "[lights]\npolar_deg = " << JoinList(polar) << "\nazimuth_deg = " << JoinList(azimuth)
      << "\nirradiance = " << Num(cfg.irradiance) << "\nambient = " << Num(cfg.ambient) << "\n\n";
  out << "[perturbation]\nangle_deg = " << Num(cfg.perturb_angle_deg)
      << "\nknown_light_baselines = " << (cfg.known_light_baselines ? "true" : "false") << "\n\n";
  const SolverConfig& s = cfg.solver;
  out << "[solver]\nlbfgs_memory = " << s.lbfgs_memory << "\nmax_iters = " << s.max_iters
      << "\ngrad_norm_tol = " << Num(s.grad_norm_tol) << "\nwolfe_c1 = " << Num(s.wolfe_c1)
      << "\nwolfe_c2 = " << Num(s.wolfe_c2) << "\nseed = " << s.seed << "\ninit_jitter = " << Num(s.init_jitter)
      << "\n";
  for (const NamedProfile& p : cfg.profiles) {
    const EnergyWeights& w = p.weights;
    out << "\n[profile." << p.name << "]\nintensity = " << Num(w.intensity) << "\ngradient = " << Num(w.gradient)
        << "\nintegrability = " << Num(w.integrability) << "\nflatness = " << Num(w.flatness)
        << "\ncylindricity = " << Num(w.cylindricity) << "\nboundary = " << Num(w.boundary) << "\n";
  }
  for (size_t k = 0; k < cfg.shapes.size(); ++k) {
    std::vector<double> flat;
    for (const GaussianBump& b : cfg.shapes[k]) flat.insert(flat.end(), {b.center.x(), b.center.y(), b.amplitude, b.width});
    out << "\n[shape." << k << "]\nbumps = " << JoinList(flat) << "\n";
  }
  return out.str();
}

std::vector<GaussianBump> GenerateShape(const ShapeCorpus& corpus, int index, int grid_size) {
  std::mt19937_64 rng = SplitStream(corpus.seed, static_cast<std::uint64_t>(index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double extent = grid_size - 1;
  const int count = std::uniform_int_distribution<int>(corpus.min_bumps, corpus.max_bumps)(rng);
  const double lo = corpus.center_margin, span = 1.0 - 2.0 * corpus.center_margin;
  std::vector<GaussianBump> bumps;
  for (int k = 0; k < count; ++k) {
    GaussianBump b;
    b.center = extent * Vec2(lo + span * unit(rng), lo + span * unit(rng));
    b.width = extent * (corpus.min_width + (corpus.max_width - corpus.min_width) * unit(rng));
    const double slope = corpus.min_slope + (corpus.max_slope - corpus.min_slope) * unit(rng);
    const double sign = unit(rng) < corpus.dent_probability ? -1.0 : 1.0;
    // A Gaussian of width s peaks in slope at A / (s sqrt(e)).
    b.amplitude = sign * slope * b.width * std::sqrt(std::numbers::e);
    bumps.push_back(b);
  }
  return bumps;
}

void WriteShapeSpecs(const std::string& path, const std::vector<std::vector<GaussianBump>>& shapes) {
  std::ofstream out = OpenOut(path);
  out << "shape,center_x,center_y,amplitude,width\n";
  for (size_t s = 0; s < shapes.size(); ++s) {
    for (const GaussianBump& b : shapes[s]) {
      out << s << ',' << Num(b.center.x()) << ',' << Num(b.center.y()) << ',' << Num(b.amplitude) << ','
          << Num(b.width) << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path);
}

std::vector<std::string> RenderAll(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.Validate();
  const SamplingGrid grid = cfg.Grid();
  const std::vector<MongePatch> shapes = cfg.Shapes();
  std::vector<std::string> written;
  for (size_t s = 0; s < shapes.size(); ++s) {
    for (size_t j = 0; j < cfg.lights.size(); ++j) {
      const RenderedImage img = Render(shapes[s], grid, cfg.Light(static_cast<int>(j)), ClampMode::kNone);
      const std::string stem = out_dir + "/shape" + std::to_string(s) + "_light" + std::to_string(j);
      WritePgm16(stem + ".pgm", grid.width, grid.height, img.intensities);
      WriteImageSidecar(stem + ".txt", img);
      WritePngGray(stem + ".png", grid.width, grid.height, ToGray8(img.intensities));
      written.insert(written.end(), {stem + ".pgm", stem + ".txt", stem + ".png"});
    }
  }
  return written;
}

ExperimentReport RunExperiment(const ExperimentConfig& cfg, int threads, const ProgressFn& progress) {
  cfg.Validate();
  Require(threads >= 1, "threads must be at least 1");
  const SamplingGrid grid = cfg.Grid();
  const std::vector<MongePatch> shapes = cfg.Shapes();

  struct Task {
    RunKey key;
    int observation = 0;
    LightModel assumed;
    EnergyWeights weights;
  };
  std::vector<Observation> observations;
  std::vector<Task> tasks;
  for (size_t s = 0; s < shapes.size(); ++s) {
    for (size_t j = 0; j < cfg.lights.size(); ++j) {
      const LightModel truth = cfg.Light(static_cast<int>(j));
      observations.push_back(Observe(Render(shapes[s], grid, truth, ClampMode::kNone)));
      std::vector<std::pair<std::string, LightModel>> conditions;
      if (cfg.known_light_baselines) conditions.emplace_back("none", truth);
      for (PerturbDirection dir : kDirections) {
        conditions.emplace_back(PerturbDirectionName(dir), PerturbLight(truth, cfg.perturb_angle_deg, dir).light);
      }
      for (const auto& [name, assumed] : conditions) {
        for (const NamedProfile& p : cfg.profiles) {
          tasks.push_back({{static_cast<int>(s), static_cast<int>(j), name, p.name},
                           static_cast<int>(observations.size()) - 1, assumed, p.weights});
        }
      }
    }
  }

  ExperimentReport report;
  report.runs.resize(tasks.size());
  std::atomic<size_t> next{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (size_t k = next++; k < tasks.size(); k = next++) {
      const Task& task = tasks[k];
      RunOutcome& out = report.runs[k];
      out.key = task.key;
      const auto start = std::chrono::steady_clock::now();
      try {
        const ReconstructionResult r = Reconstruct(observations[task.observation], task.assumed, task.weights,
                                                   cfg.solver, &shapes[task.key.shape]);
        out.trace = r.trace;
        out.mean_ang_err_deg = r.mean_ang_err_deg;
        out.median_ang_err_deg = r.median_ang_err_deg;
        out.ok = true;
        if (r.line_search_failure) out.error = "line search failure: " + r.termination;
      } catch (const std::exception& e) {
        out.error = e.what();
      }
      out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        progress(out);
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const RunOutcome& r : report.runs) report.failures += r.ok ? 0 : 1;
  return report;
}

std::vector<SummaryRow> Summarize(const ExperimentConfig& cfg, const ExperimentReport& report) {
  std::vector<SummaryRow> rows;
  for (const char* condition : {"known", "perturbed"}) {
    const bool known = std::string(condition) == "known";
    if (known && !cfg.known_light_baselines) continue;
    for (const NamedProfile& p : cfg.profiles) {
      SummaryRow row{condition, p.name, 0, 0.0, 0.0};
      for (const RunOutcome& r : report.runs) {
        if (!r.ok || r.key.profile != p.name || (r.key.perturbation == "none") != known) continue;
        ++row.runs;
        row.mean_ang_err_deg += r.mean_ang_err_deg;
        row.median_ang_err_deg += r.median_ang_err_deg;
      }
      if (row.runs > 0) {
        row.mean_ang_err_deg /= row.runs;
        row.median_ang_err_deg /= row.runs;
      } else {
        row.mean_ang_err_deg = row.median_ang_err_deg = std::nan("");
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void WriteLongCsv(std::ostream& out, const ExperimentReport& report) {
  out << "# schema=" << kLongCsvSchema << "\n";
  out << "shape,light,perturb_dir,profile,iter,energy,mean_ang_err_deg,median_ang_err_deg\n";
  for (const RunOutcome& r : report.runs) {
    for (const IterationRecord& it : r.trace) {
      out << r.key.shape << ',' << r.key.light << ',' << r.key.perturbation << ',' << r.key.profile << ','
          << it.iteration << ',' << Num(it.terms.total) << ',' << Num(it.mean_ang_err_deg) << ','
          << Num(it.median_ang_err_deg) << '\n';
    }
  }
}

void WriteSummaryCsv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "# schema=" << kSummaryCsvSchema << "\n";
  out << "condition,profile,runs,mean_ang_err_deg,median_ang_err_deg\n";
  for (const SummaryRow& r : rows) {
    out << r.condition << ',' << r.profile << ',' << r.runs << ',' << Num(r.mean_ang_err_deg) << ','
        << Num(r.median_ang_err_deg) << '\n';
  }
}

std::vector<std::string> WriteErrorPlots(const ExperimentConfig& cfg, const ExperimentReport& report,
                                         const std::string& out_dir) {
  constexpr int kWidth = 480, kHeight = 320, kLeft = 40, kRight = 12, kTop = 12, kBottom = 30;
  const int shapes = cfg.shapes.empty() ? cfg.corpus.count : static_cast<int>(cfg.shapes.size());
  std::vector<std::string> written;
  for (int s = 0; s < shapes; ++s) {
    for (int j = 0; j < static_cast<int>(cfg.lights.size()); ++j) {
      std::vector<const RunOutcome*> runs;
      int last_iter = 1;
      double top = 5.0;
      for (const RunOutcome& r : report.runs) {
        if (r.key.shape != s || r.key.light != j || r.trace.empty()) continue;
        runs.push_back(&r);
        last_iter = std::max(last_iter, r.trace.back().iteration);
        for (const IterationRecord& it : r.trace) {
          if (std::isfinite(it.mean_ang_err_deg)) top = std::max(top, it.mean_ang_err_deg);
        }
      }
      top = 5.0 * std::ceil(top / 5.0);
      Canvas canvas(kWidth, kHeight);
      const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
      auto px = [&](double iter) { return kLeft + plot_w * iter / last_iter; };
      auto py = [&](double err) { return kTop + plot_h * (1.0 - err / top); };
      for (double e = 5.0; e < top; e += 5.0) canvas.Line(px(0), py(e), px(last_iter), py(e), {225, 225, 225});
      canvas.Line(px(0), py(0), px(last_iter), py(0), {0, 0, 0});
      canvas.Line(px(0), py(0), px(0), py(top), {0, 0, 0});
      for (const RunOutcome* r : runs) {
        const auto color = ProfileColor(r->key.profile, r->key.perturbation == "none");
        for (size_t k = 1; k < r->trace.size(); ++k) {
          const IterationRecord &a = r->trace[k - 1], &b = r->trace[k];
          if (!std::isfinite(a.mean_ang_err_deg) || !std::isfinite(b.mean_ang_err_deg)) continue;
          canvas.Line(px(a.iteration), py(a.mean_ang_err_deg), px(b.iteration), py(b.mean_ang_err_deg), color);
        }
      }
      const std::string path = out_dir + "/errors_shape" + std::to_string(s) + "_light" + std::to_string(j) + ".png";
      canvas.Save(path);
      written.push_back(path);
    }
  }
  return written;
}

void WriteTraceCsv(std::ostream& out, const ReconstructionResult& result) {
  out << "iteration,energy,intensity,gradient,integrability,flatness,cylindricity,boundary,mean_ang_err_deg,"
         "median_ang_err_deg\n";
  for (const IterationRecord& it : result.trace) {
    const EnergyTerms& t = it.terms;
    out << it.iteration << ',' << Num(t.total) << ',' << Num(t.intensity) << ',' << Num(t.gradient) << ','
        << Num(t.integrability) << ',' << Num(t.flatness) << ',' << Num(t.cylindricity) << ',' << Num(t.boundary)
        << ',' << Num(it.mean_ang_err_deg) << ',' << Num(it.median_ang_err_deg) << '\n';
  }
}

void WriteNormalMapPng(const std::string& path, const ReconstructionState& state) {
  std::vector<std::uint8_t> rgb;
  rgb.reserve(3 * state.g.size());
  for (int k = 0; k < static_cast<int>(state.g.size()); ++k) {
    const Vec3 n = state.Normal(k);
    for (int c = 0; c < 3; ++c) {
      rgb.push_back(static_cast<std::uint8_t>(std::lround(std::clamp((n[c] + 1.0) * 0.5, 0.0, 1.0) * 255.0)));
    }
  }
  WritePngRgb(path, state.grid.width, state.grid.height, rgb);
}

void WriteDepthMapPng(const std::string& path, const ReconstructionState& state) {
  WritePngGray(path, state.grid.width, state.grid.height, ToGray8(IntegrateDepth(state)));
}

}  // namespace patchshade
