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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Sparse>
#include <ceres/ceres.h>

#include "patchshade/error.h"

namespace patchshade {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double RadToDeg(double rad) { return rad * 180.0 / std::numbers::pi; }

Vec2 OutwardDirection(const SamplingGrid& grid, int i, int j) {
  Vec2 b = Vec2::Zero();
  if (i == 0) b.x() -= 1.0;
  if (i == grid.width - 1) b.x() += 1.0;
  if (j == 0) b.y() -= 1.0;
  if (j == grid.height - 1) b.y() += 1.0;
  return b.norm() > 0.0 ? Vec2(b.normalized()) : b;
}

// Shading s = l.n as a function of the slopes g, with its first two
// derivatives.
struct ShadingJet {
  double value;
  Vec2 grad;
  Mat2 hess;
};

ShadingJet ShadingOf(const Vec3& l, const Vec2& g) {
  const double w2 = 1.0 + g.squaredNorm();
  const double w = std::sqrt(w2);
  const Vec2 c(-l.x(), -l.y());
  const double u = l.z() + c.dot(g);
  ShadingJet s;
  s.value = u / w;
  s.grad = c / w - u * g / (w2 * w);
  s.hess = -(c * g.transpose() + g * c.transpose()) / (w2 * w) - u * Mat2::Identity() / (w2 * w) +
           3.0 * u * g * g.transpose() / (w2 * w2 * w);
  return s;
}

double Median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

AngularError ErrorStats(const SamplingGrid& grid, const ReconstructionState& state,
                        const std::vector<Vec3>& truth) {
  AngularError out;
  out.per_node_deg.assign(grid.size(), kNaN);
  std::vector<double> interior;
  double sum = 0.0;
  for (int j = 0; j < grid.height; ++j) {
    for (int i = 0; i < grid.width; ++i) {
      if (grid.OnBorder(i, j)) continue;
      const int k = grid.Index(i, j);
      const double c = std::clamp(state.Normal(k).dot(truth[k]), -1.0, 1.0);
      const double deg = RadToDeg(std::acos(c));
      out.per_node_deg[k] = deg;
      interior.push_back(deg);
      sum += deg;
    }
  }
  out.mean_deg = interior.empty() ? kNaN : sum / interior.size();
  out.median_deg = Median(std::move(interior));
  return out;
}

}  // namespace

ReconstructionState ReconstructionState::Flat(const SamplingGrid& grid) {
  return ReconstructionState{grid, std::vector<Vec2>(grid.size(), Vec2::Zero())};
}

ReconstructionState ReconstructionState::FromPatch(const MongePatch& patch, const SamplingGrid& grid) {
  ReconstructionState s = Flat(grid);
  for (int j = 0; j < grid.height; ++j)
    for (int i = 0; i < grid.width; ++i) s.g[grid.Index(i, j)] = patch.Jet(grid.Node(i, j)).gradient;
  return s;
}

Vec3 ReconstructionState::Normal(int index) const {
  const Vec2& s = g[index];
  return Vec3(-s.x(), -s.y(), 1.0).normalized();
}

void EnergyWeights::Validate() const {
  for (double v : {intensity, gradient, integrability, flatness, cylindricity, boundary}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "energy weights must be finite and non-negative");
    }
  }
  if (intensity == 0.0 && gradient == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "at least one of the intensity and gradient weights must be positive");
  }
}

EnergyWeights IntensityProfile() { return {4.0, 0.0, 150.0, 0.001, 0.0, 0.05}; }
EnergyWeights GradientProfile() { return {0.0, 100.0, 150.0, 0.001, 0.0, 0.05}; }
EnergyWeights GradientCylProfile() { return {0.0, 100.0, 150.0, 0.001, 10.0, 0.05}; }

Observation Observe(const RenderedImage& image, double grad_tol) {
  if (grad_tol < 0.0) grad_tol = DefaultGradTol(image);
  const SamplingGrid& grid = image.grid;
  Observation obs;
  obs.image = image;
  obs.gradients.assign(grid.size(), Vec2::Zero());
  obs.isophotes.assign(grid.size(), Vec2::Zero());
  for (int j = 1; j + 1 < grid.height; ++j) {
    for (int i = 1; i + 1 < grid.width; ++i) {
      const ImageJet jet = JetAt(image, i, j);
      const int k = grid.Index(i, j);
      obs.gradients[k] = jet.gradient;
      if (jet.gradient.norm() > grad_tol) obs.isophotes[k] = IsophoteDirection(jet, grad_tol);
    }
  }
  return obs;
}

SfsEnergy::SfsEnergy(Observation observation, LightModel assumed_light, EnergyWeights weights,
                     double boundary_smoothing)
    : observation_(std::move(observation)),
      light_(assumed_light),
      weights_(weights),
      smoothing_(boundary_smoothing) {
  weights_.Validate();
  if (!light_.l.allFinite() || !std::isfinite(light_.ambient)) {
    throw Error(ErrorCode::kInvalidArgument, "assumed light must be finite");
  }
  if (!(smoothing_ > 0.0)) throw Error(ErrorCode::kInvalidArgument, "boundary smoothing must be positive");
  const SamplingGrid& g = observation_.image.grid;
  if (g.width < 3 || g.height < 3) throw Error(ErrorCode::kInvalidArgument, "grid needs at least 3x3 nodes");
}

EnergyTerms SfsEnergy::Evaluate(std::span<const double> params, std::span<double> gradient) const {
  return EvaluateWeighted(params, gradient, weights_);
}

double SfsEnergy::TermEnergy(int term, std::span<const double> params, std::span<double> gradient) const {
  EnergyWeights w{};
  double* slots[6] = {&w.intensity, &w.gradient, &w.integrability, &w.flatness, &w.cylindricity, &w.boundary};
  const double* source[6] = {&weights_.intensity, &weights_.gradient, &weights_.integrability,
                             &weights_.flatness, &weights_.cylindricity, &weights_.boundary};
  if (term < 0 || term > 5) throw Error(ErrorCode::kInvalidArgument, "term index must be in 0..5");
  *slots[term] = *source[term] > 0.0 ? *source[term] : 1.0;
  return EvaluateWeighted(params, gradient, w).total;
}

double SfsEnergy::EnergyAndGradient(const ReconstructionState& state, std::vector<Vec2>* gradient) const {
  if (static_cast<int>(state.g.size()) != grid().size()) {
    throw Error(ErrorCode::kInvalidArgument, "state and observation grids differ");
  }
  const std::span<const double> params(state.g.front().data(), NumParameters());
  std::span<double> out;
  if (gradient) {
    gradient->assign(state.g.size(), Vec2::Zero());
    out = std::span<double>(gradient->front().data(), NumParameters());
  }
  const EnergyTerms t = Evaluate(params, out);
  if (!std::isfinite(t.total)) {
    std::ostringstream msg;
    msg << "energy is " << t.total << " (slopes exploded?)";
    throw Error(ErrorCode::kNonFiniteEnergy, msg.str());
  }
  return t.total;
}

EnergyTerms SfsEnergy::EvaluateWeighted(std::span<const double> params, std::span<double> gradient,
                                        const EnergyWeights& w) const {
  const SamplingGrid& grid = observation_.image.grid;
  const double inv2h = 1.0 / (2.0 * grid.spacing);
  const bool want_grad = !gradient.empty();
  if (want_grad) std::fill(gradient.begin(), gradient.end(), 0.0);
  auto slope = [&](int i, int j) {
    const int k = grid.Index(i, j);
    return Vec2(params[2 * k], params[2 * k + 1]);
  };
  auto add = [&](int i, int j, const Vec2& v) {
    const int k = grid.Index(i, j);
    gradient[2 * k] += v.x();
    gradient[2 * k + 1] += v.y();
  };
  const Vec3& l = light_.l;
  EnergyTerms t;

  for (int j = 0; j < grid.height; ++j) {
    for (int i = 0; i < grid.width; ++i) {
      const int k = grid.Index(i, j);
      const Vec2 g = slope(i, j);
      Vec2 g_bar = Vec2::Zero();
      const bool need_shading = w.intensity > 0.0 || (w.gradient > 0.0 && !grid.OnBorder(i, j));
      const ShadingJet s = need_shading ? ShadingOf(l, g) : ShadingJet{0.0, Vec2::Zero(), Mat2::Zero()};

      if (w.intensity > 0.0) {
        const double r = observation_.image.intensities[k] - s.value - light_.ambient;
        t.intensity += r * r;
        g_bar -= 2.0 * w.intensity * r * s.grad;
      }
      if (w.flatness > 0.0) {
        t.flatness += g.squaredNorm();
        g_bar += 2.0 * w.flatness * g;
      }
      if (grid.OnBorder(i, j)) {
        if (w.boundary > 0.0) {
          const Vec2 b = OutwardDirection(grid, i, j);
          const double rho = std::sqrt(g.squaredNorm() + smoothing_ * smoothing_);
          const double miss = 1.0 + g.dot(b) / rho;  // 1 - t.b with t = -g / rho
          t.boundary += miss * miss;
          g_bar += 2.0 * w.boundary * miss * (b / rho - g * g.dot(b) / (rho * rho * rho));
        }
        if (want_grad) add(i, j, g_bar);
        continue;
      }

      Mat2 dg;  // column c = d g / d x_c
      dg.col(0) = (slope(i + 1, j) - slope(i - 1, j)) * inv2h;
      dg.col(1) = (slope(i, j + 1) - slope(i, j - 1)) * inv2h;
      Mat2 dg_bar = Mat2::Zero();

      if (w.integrability > 0.0) {
        const double curl = dg(0, 1) - dg(1, 0);
        t.integrability += curl * curl;
        dg_bar(0, 1) += 2.0 * w.integrability * curl;
        dg_bar(1, 0) -= 2.0 * w.integrability * curl;
      }
      if (w.gradient > 0.0) {
        const Vec2 e = observation_.gradients[k] - dg.transpose() * s.grad;
        t.gradient += e.squaredNorm();
        const Vec2 a_bar = -2.0 * w.gradient * dg * e;
        dg_bar -= 2.0 * w.gradient * s.grad * e.transpose();
        g_bar += s.hess * a_bar;
      }
      const Vec2& iso = observation_.isophotes[k];
      if (w.cylindricity > 0.0 && iso.squaredNorm() > 0.0) {
        const Vec2 v = dg * iso;
        const double w2 = 1.0 + g.squaredNorm();
        const double gv = g.dot(v);
        t.cylindricity += v.squaredNorm() / w2 - gv * gv / (w2 * w2);
        const Mat2 q = (Mat2::Identity() - g * g.transpose() / w2) / w2;
        dg_bar += 2.0 * w.cylindricity * q * v * iso.transpose();
        g_bar += w.cylindricity * (-2.0 * v.squaredNorm() * g / (w2 * w2) - 2.0 * gv * v / (w2 * w2) +
                                   4.0 * gv * gv * g / (w2 * w2 * w2));
      }
      if (want_grad) {
        add(i, j, g_bar);
        add(i + 1, j, dg_bar.col(0) * inv2h);
        add(i - 1, j, -dg_bar.col(0) * inv2h);
        add(i, j + 1, dg_bar.col(1) * inv2h);
        add(i, j - 1, -dg_bar.col(1) * inv2h);
      }
    }
  }
  t.total = w.intensity * t.intensity + w.gradient * t.gradient + w.integrability * t.integrability +
            w.flatness * t.flatness + w.cylindricity * t.cylindricity + w.boundary * t.boundary;
  return t;
}

void SolverConfig::Validate() const {
  if (lbfgs_memory < 3) throw Error(ErrorCode::kInvalidArgument, "L-BFGS memory must be at least 3");
  if (max_iters < 0) throw Error(ErrorCode::kInvalidArgument, "max_iters must be non-negative");
  if (!(grad_norm_tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "gradient tolerance must be positive");
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "Wolfe constants need 0 < c1 < c2 < 1");
  }
  if (!(init_jitter >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "init_jitter must be non-negative");
}

AngularError AngularErrorAgainst(const ReconstructionState& state, const MongePatch& truth) {
  std::vector<Vec3> normals(state.grid.size());
  for (int j = 0; j < state.grid.height; ++j)
    for (int i = 0; i < state.grid.width; ++i)
      normals[state.grid.Index(i, j)] = truth.Normal(state.grid.Node(i, j));
  return ErrorStats(state.grid, state, normals);
}

AngularError AngularErrorAgainst(const ReconstructionState& state, const ReconstructionState& truth) {
  if (truth.g.size() != state.g.size()) throw Error(ErrorCode::kInvalidArgument, "states have different grids");
  std::vector<Vec3> normals(truth.g.size());
  for (size_t k = 0; k < normals.size(); ++k) normals[k] = truth.Normal(static_cast<int>(k));
  return ErrorStats(state.grid, state, normals);
}

namespace {

class CeresEnergy final : public ceres::FirstOrderFunction {
 public:
  explicit CeresEnergy(const SfsEnergy& energy) : energy_(energy) {}

  bool Evaluate(const double* params, double* cost, double* gradient) const override {
    const int n = energy_.NumParameters();
    const EnergyTerms t = energy_.Evaluate(std::span<const double>(params, n),
                                           gradient ? std::span<double>(gradient, n) : std::span<double>());
    *cost = t.total;
    return std::isfinite(t.total);
  }

  int NumParameters() const override { return energy_.NumParameters(); }

 private:
  const SfsEnergy& energy_;
};

class TraceRecorder final : public ceres::IterationCallback {
 public:
  TraceRecorder(const SfsEnergy& energy, const std::vector<double>& params, const MongePatch* truth,
                ReconstructionResult& result)
      : energy_(energy), params_(params), result_(result) {
    if (truth) {
      const SamplingGrid& grid = energy.grid();
      truth_normals_.resize(grid.size());
      for (int j = 0; j < grid.height; ++j)
        for (int i = 0; i < grid.width; ++i) truth_normals_[grid.Index(i, j)] = truth->Normal(grid.Node(i, j));
    }
  }

  ceres::CallbackReturnType operator()(const ceres::IterationSummary& summary) override {
    Record(summary.iteration);
    return ceres::SOLVER_CONTINUE;
  }

  void Record(int iteration) {
    IterationRecord rec;
    rec.iteration = iteration;
    rec.terms = energy_.Evaluate(params_, {});
    rec.mean_ang_err_deg = rec.median_ang_err_deg = kNaN;
    if (!truth_normals_.empty()) {
      ReconstructionState state = StateOf(energy_.grid(), params_);
      const AngularError err = ErrorStats(energy_.grid(), state, truth_normals_);
      rec.mean_ang_err_deg = err.mean_deg;
      rec.median_ang_err_deg = err.median_deg;
      result_.per_iter_ang_err.push_back(err.mean_deg);
    }
    result_.energy_trace.push_back(rec.terms.total);
    result_.trace.push_back(rec);
  }

  static ReconstructionState StateOf(const SamplingGrid& grid, const std::vector<double>& params) {
    ReconstructionState s = ReconstructionState::Flat(grid);
    for (int k = 0; k < grid.size(); ++k) s.g[k] = Vec2(params[2 * k], params[2 * k + 1]);
    return s;
  }

 private:
  const SfsEnergy& energy_;
  const std::vector<double>& params_;
  ReconstructionResult& result_;
  std::vector<Vec3> truth_normals_;
};

}  // namespace

ReconstructionResult Reconstruct(const Observation& observed, const LightModel& assumed_light,
                                 const EnergyWeights& weights, const SolverConfig& cfg,
                                 const MongePatch* truth, const ReconstructionState* init) {
  cfg.Validate();
  const SfsEnergy energy(observed, assumed_light, weights);
  const SamplingGrid& grid = energy.grid();

  std::vector<double> params(energy.NumParameters(), 0.0);
  if (init) {
    if (static_cast<int>(init->g.size()) != grid.size()) {
      throw Error(ErrorCode::kInvalidArgument, "initial state does not match the observation grid");
    }
    for (int k = 0; k < grid.size(); ++k) {
      params[2 * k] = init->g[k].x();
      params[2 * k + 1] = init->g[k].y();
    }
  }
  if (cfg.init_jitter > 0.0) {
    std::mt19937_64 rng = SplitStream(cfg.seed, 0);
    std::normal_distribution<double> noise(0.0, cfg.init_jitter);
    for (double& v : params) v += noise(rng);
  }

  ReconstructionResult result;
  result.weights = weights;
  TraceRecorder recorder(energy, params, truth, result);

  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.line_search_type = ceres::WOLFE;
  options.max_lbfgs_rank = cfg.lbfgs_memory;
  options.line_search_sufficient_function_decrease = cfg.wolfe_c1;
  options.line_search_sufficient_curvature_decrease = cfg.wolfe_c2;
  options.max_num_iterations = cfg.max_iters;
  options.gradient_tolerance = cfg.grad_norm_tol;
  options.function_tolerance = 1e-14;
  options.parameter_tolerance = 1e-14;
  options.logging_type = ceres::SILENT;
  options.update_state_every_iteration = true;
  options.callbacks.push_back(&recorder);

  ceres::GradientProblem problem(new CeresEnergy(energy));
  ceres::GradientProblemSolver::Summary summary;
  if (cfg.max_iters == 0) {
    recorder.Record(0);
    result.termination = "max_iters = 0";
  } else {
    ceres::Solve(options, problem, params.data(), &summary);
    result.termination = summary.message;
    result.line_search_failure = summary.termination_type == ceres::FAILURE;
    if (result.trace.empty()) recorder.Record(0);
  }
  result.iterations = result.trace.back().iteration;
  result.state = TraceRecorder::StateOf(grid, params);
  if (truth) {
    const AngularError err = AngularErrorAgainst(result.state, *truth);
    result.mean_ang_err_deg = err.mean_deg;
    result.median_ang_err_deg = err.median_deg;
  } else {
    result.mean_ang_err_deg = result.median_ang_err_deg = kNaN;
  }
  return result;
}

const char* PerturbDirectionName(PerturbDirection dir) {
  switch (dir) {
    case PerturbDirection::kTowardViewer: return "toward";
    case PerturbDirection::kAwayFromViewer: return "away";
    case PerturbDirection::kClockwise: return "cw";
    case PerturbDirection::kCounterClockwise: return "ccw";
  }
  return "unknown";
}

PerturbedLight PerturbLight(const LightModel& light, double angle_deg, PerturbDirection dir) {
  const double norm = light.l.norm();
  if (!(norm > 0.0) || !std::isfinite(norm) || !std::isfinite(angle_deg)) {
    throw Error(ErrorCode::kInvalidArgument, "perturbation needs a finite nonzero light and angle");
  }
  const double a = angle_deg * std::numbers::pi / 180.0;
  const Vec3 unit = light.l / norm;
  const Vec3 z = Vec3::UnitZ();
  const Vec3 off_axis = unit.dot(z) * unit - z;
  const bool along_axis = off_axis.norm() < 1e-12;
  PerturbedLight out;
  out.light = light;
  switch (dir) {
    case PerturbDirection::kTowardViewer:
    case PerturbDirection::kAwayFromViewer: {
      Vec3 away = along_axis ? Vec3(Vec3::UnitX()) : Vec3(off_axis.normalized());
      if (along_axis && unit.z() < 0.0) away = -away;
      const double sign = dir == PerturbDirection::kAwayFromViewer ? 1.0 : -1.0;
      out.light.l = norm * (std::cos(a) * unit + sign * std::sin(a) * away);
      break;
    }
    case PerturbDirection::kClockwise:
    case PerturbDirection::kCounterClockwise: {
      if (along_axis) {
        out.degenerate_axis = true;
        break;
      }
      const double turn = dir == PerturbDirection::kClockwise ? -a : a;
      out.light.l = Eigen::AngleAxisd(turn, z) * light.l;
      break;
    }
  }
  return out;
}

std::vector<double> IntegrateDepth(const ReconstructionState& state) {
  const SamplingGrid& grid = state.grid;
  const int n = grid.size();
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> rhs;
  int row = 0;
  auto equation = [&](int a, int b, double target) {
    triplets.emplace_back(row, b, 1.0);
    triplets.emplace_back(row, a, -1.0);
    rhs.push_back(target);
    ++row;
  };
  const double h = grid.spacing;
  for (int j = 0; j < grid.height; ++j) {
    for (int i = 0; i < grid.width; ++i) {
      const int k = grid.Index(i, j);
      if (i + 1 < grid.width) {
        const int r = grid.Index(i + 1, j);
        equation(k, r, 0.5 * h * (state.g[k].x() + state.g[r].x()));
      }
      if (j + 1 < grid.height) {
        const int u = grid.Index(i, j + 1);
        equation(k, u, 0.5 * h * (state.g[k].y() + state.g[u].y()));
      }
    }
  }
  triplets.emplace_back(row, 0, 1.0);  // pin one node; the mean is removed below
  rhs.push_back(0.0);
  ++row;
  Eigen::SparseMatrix<double> a(row, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), row);
  const Eigen::SparseMatrix<double> normal = a.transpose() * a;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(normal);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::kDegenerate, "depth integration failed");
  Eigen::VectorXd depth = solver.solve(a.transpose() * b);
  depth.array() -= depth.mean();
  return std::vector<double>(depth.data(), depth.data() + n);
}

}  // namespace patchshade
