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

#include "patchshade/surface_geometry.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "patchshade/error.h"

namespace patchshade {
namespace {

constexpr double kPi = std::numbers::pi;

Mat2 Rotation(double angle) {
  Mat2 r;
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

// T(., ., e_k) as a symmetric 2x2 matrix for third derivatives
// (xxx, xxy, xyy, yyy).
Mat2 ThirdSlice(const std::array<double, 4>& t, int k) {
  Mat2 s;
  if (k == 0) {
    s << t[0], t[1], t[1], t[2];
  } else {
    s << t[1], t[2], t[2], t[3];
  }
  return s;
}

HeightJet BumpJet(const GaussianBump& b, const Vec2& x) {
  HeightJet j;
  const double dx = x.x() - b.center.x();
  const double dy = x.y() - b.center.y();
  const double a = -1.0 / (b.width * b.width);
  const double e = b.amplitude * std::exp(0.5 * a * (dx * dx + dy * dy));
  j.value = e;
  j.gradient = Vec2(a * dx * e, a * dy * e);
  j.hessian << (a + a * a * dx * dx) * e, a * a * dx * dy * e,
               a * a * dx * dy * e, (a + a * a * dy * dy) * e;
  const double a2 = a * a, a3 = a2 * a;
  j.third = {(3 * a2 * dx + a3 * dx * dx * dx) * e,
             (a2 * dy + a3 * dx * dx * dy) * e,
             (a2 * dx + a3 * dx * dy * dy) * e,
             (3 * a2 * dy + a3 * dy * dy * dy) * e};
  j.has_third = true;
  return j;
}

HeightJet CubicJet(const CubicHeight& c, const Vec2& x) {
  HeightJet j;
  const Vec2 d = x - c.origin;
  const auto& t = c.third;
  const double dx = d.x(), dy = d.y();
  const double cubic = t[0] * dx * dx * dx + 3 * t[1] * dx * dx * dy +
                       3 * t[2] * dx * dy * dy + t[3] * dy * dy * dy;
  j.value = c.value + c.gradient.dot(d) + 0.5 * d.dot(c.hessian * d) + cubic / 6.0;
  j.gradient = c.gradient + c.hessian * d +
               0.5 * Vec2(t[0] * dx * dx + 2 * t[1] * dx * dy + t[2] * dy * dy,
                          t[1] * dx * dx + 2 * t[2] * dx * dy + t[3] * dy * dy);
  j.hessian = c.hessian + ThirdSlice(t, 0) * dx + ThirdSlice(t, 1) * dy;
  j.third = t;
  j.has_third = true;
  return j;
}

// Central differences at grid nodes: fourth order with two neighbours on
// each side, second order with one, one-sided on the outer ring (no second
// derivatives there).
HeightJet GridJet(const HeightGrid& g, int i, int j) {
  auto at = [&](int a, int b) { return g.at(a, b); };
  const double s = g.spacing;
  const int rx = std::min({i, g.width - 1 - i, 2});
  const int ry = std::min({j, g.height - 1 - j, 2});

  // First-derivative weights on offsets -2..2 for the available reach.
  auto first_weights = [](int reach, int pos) {
    std::array<double, 5> w{};  // index = offset + 2
    if (reach >= 2) {
      w = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
    } else if (reach == 1) {
      w = {0.0, -0.5, 0.0, 0.5, 0.0};
    } else if (pos == 0) {
      w = {0.0, 0.0, -1.5, 2.0, -0.5};
    } else {
      w = {0.5, -2.0, 1.5, 0.0, 0.0};
    }
    return w;
  };
  auto second_weights = [](int reach) {
    std::array<double, 5> w{};
    if (reach >= 2) {
      w = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
    } else if (reach == 1) {
      w = {0.0, 1.0, -2.0, 1.0, 0.0};
    }
    return w;
  };

  HeightJet jet;
  jet.value = at(i, j);
  const auto wx = first_weights(rx, i);
  const auto wy = first_weights(ry, j);
  const auto wxx = second_weights(rx);
  const auto wyy = second_weights(ry);
  double hx = 0, hy = 0, hxx = 0, hyy = 0, hxy = 0;
  for (int o = -2; o <= 2; ++o) {
    if (wx[o + 2] != 0.0) hx += wx[o + 2] * at(i + o, j);
    if (wy[o + 2] != 0.0) hy += wy[o + 2] * at(i, j + o);
    if (wxx[o + 2] != 0.0) hxx += wxx[o + 2] * at(i + o, j);
    if (wyy[o + 2] != 0.0) hyy += wyy[o + 2] * at(i, j + o);
  }
  if (rx >= 1 && ry >= 1) {
    for (int a = -2; a <= 2; ++a) {
      if (wx[a + 2] == 0.0) continue;
      for (int b = -2; b <= 2; ++b) {
        if (wy[b + 2] == 0.0) continue;
        hxy += wx[a + 2] * wy[b + 2] * at(i + a, j + b);
      }
    }
  }
  jet.gradient = Vec2(hx, hy) / s;
  jet.hessian << hxx, hxy, hxy, hyy;
  jet.hessian /= s * s;
  jet.has_third = false;
  return jet;
}

// Second-order part of the frame plus the image-plane principal directions
// (normalized so that |Ds v| = 1).
struct PencilFrame {
  double sigma = 0.0;
  double tau = 0.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double phi = 0.0;
  Vec2 v1 = Vec2::UnitX();
  Vec2 v2 = Vec2::UnitY();
  bool umbilic = false;
};

Vec3 Lift(const Vec2& v, const Vec2& grad) { return Vec3(v.x(), v.y(), grad.dot(v)); }

PencilFrame SecondOrder(const HeightJet& jet, double length_scale) {
  PencilFrame out;
  const Vec2& grad = jet.gradient;
  const double slope = grad.norm();
  const double w = std::sqrt(1.0 + slope * slope);
  out.sigma = std::atan(slope);
  out.tau = slope > 0.0 ? std::atan2(grad.y(), grad.x()) : 0.0;
  if (out.tau < 0.0) out.tau += 2.0 * kPi;

  const Mat2 second = -jet.hessian / w;
  const Mat2 metric = Mat2::Identity() + grad * grad.transpose();
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat2> es(second, metric);
  const Vec2 vals = es.eigenvalues();
  const Mat2 vecs = es.eigenvectors();  // columns satisfy v^T G v = 1
  const int first = std::abs(vals(1)) >= std::abs(vals(0)) ? 1 : 0;
  out.kappa1 = vals(first);
  out.kappa2 = vals(1 - first);

  const double ct = std::cos(out.tau), st = std::sin(out.tau);
  const double cs = std::cos(out.sigma), ss = std::sin(out.sigma);
  const Vec3 u1(cs * ct, cs * st, ss);
  const Vec3 u2(-st, ct, 0.0);

  const double scale =
      std::max({std::abs(out.kappa1), std::abs(out.kappa2), 1.0 / length_scale});
  if (std::abs(out.kappa1 - out.kappa2) < kUmbilicTol * scale) {
    out.umbilic = true;
    out.phi = 0.0;
    out.v1 = u1.head<2>();
    out.v2 = u2.head<2>();
    return out;
  }

  Vec2 v1 = vecs.col(first);
  Vec3 d1 = Lift(v1, grad);
  double phi = std::atan2(d1.dot(u2), d1.dot(u1));
  if (phi < 0.0) {
    phi += kPi;
    v1 = -v1;
  }
  if (phi >= kPi - 1e-12) {
    phi -= kPi;
    v1 = -v1;
  }
  out.phi = phi;
  out.v1 = v1;
  const Vec3 e2 = -std::sin(phi) * u1 + std::cos(phi) * u2;
  out.v2 = e2.head<2>();
  return out;
}

// d kappa / d x_k for a G-normalized eigenvector v of the pencil (-H/w, G).
Vec2 CurvatureGradient(const HeightJet& jet, double kappa, const Vec2& v) {
  const Vec2& grad = jet.gradient;
  const Mat2& hess = jet.hessian;
  const double w = std::sqrt(1.0 + grad.squaredNorm());
  Vec2 out;
  for (int k = 0; k < 2; ++k) {
    const Vec2 hk = hess.col(k);
    const Mat2 d_second = -ThirdSlice(jet.third, k) / w + hess * (grad.dot(hk)) / (w * w * w);
    const Mat2 d_metric = hk * grad.transpose() + grad * hk.transpose();
    out(k) = v.dot((d_second - kappa * d_metric) * v);
  }
  return out;
}

LocalSurfaceFrame Assemble(const PencilFrame& p, const Vec2& dk1, const Vec2& dk2) {
  LocalSurfaceFrame fr;
  fr.slant = p.sigma;
  fr.tilt = p.tau;
  fr.kappa1 = p.kappa1;
  fr.kappa2 = p.kappa2;
  fr.phi = p.phi;
  fr.umbilic = p.umbilic;
  fr.dk1_ds = dk1.dot(p.v1);
  fr.dk1_dt = dk1.dot(p.v2);
  fr.dk2_ds = dk2.dot(p.v1);
  fr.dk2_dt = dk2.dot(p.v2);
  return fr;
}

}  // namespace

MongePatch MongePatch::Analytic(std::vector<GaussianBump> bumps, CubicHeight cubic) {
  for (const auto& b : bumps) {
    if (!(b.width > 0.0) || !std::isfinite(b.amplitude) || !b.center.allFinite()) {
      throw Error(ErrorCode::kInvalidArgument, "Gaussian bump needs a finite amplitude and width > 0");
    }
  }
  return MongePatch(AnalyticForm{std::move(bumps), cubic});
}

MongePatch MongePatch::Sampled(HeightGrid grid) {
  if (!(grid.spacing > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "height grid spacing must be positive");
  }
  if (grid.width <= 0 || grid.height <= 0 ||
      grid.values.size() != static_cast<size_t>(grid.width) * grid.height) {
    throw Error(ErrorCode::kInvalidArgument, "height grid size does not match its dimensions");
  }
  for (double v : grid.values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "height grid has non-finite values");
  }
  return MongePatch(std::move(grid));
}

std::optional<std::array<int, 2>> NodeOf(const HeightGrid& grid, const Vec2& x) {
  const Vec2 r = (x - grid.origin) / grid.spacing;
  const double ri = std::round(r.x()), rj = std::round(r.y());
  if (std::abs(r.x() - ri) > 1e-9 || std::abs(r.y() - rj) > 1e-9) return std::nullopt;
  if (ri < 0 || rj < 0 || ri >= grid.width || rj >= grid.height) return std::nullopt;
  return std::array<int, 2>{static_cast<int>(ri), static_cast<int>(rj)};
}

double MongePatch::Height(const Vec2& x) const {
  if (const auto* g = std::get_if<HeightGrid>(&form_)) {
    auto node = NodeOf(*g, x);
    if (!node) throw Error(ErrorCode::kInvalidArgument, "sampled patch queried off its grid");
    return g->at((*node)[0], (*node)[1]);
  }
  return Jet(x).value;
}

HeightJet MongePatch::Jet(const Vec2& x) const {
  if (const auto* g = std::get_if<HeightGrid>(&form_)) {
    auto node = NodeOf(*g, x);
    if (!node) throw Error(ErrorCode::kInvalidArgument, "sampled patch queried off its grid");
    return GridJet(*g, (*node)[0], (*node)[1]);
  }
  const auto& a = std::get<AnalyticForm>(form_);
  HeightJet jet = CubicJet(a.cubic, x);
  for (const auto& b : a.bumps) {
    HeightJet bj = BumpJet(b, x);
    jet.value += bj.value;
    jet.gradient += bj.gradient;
    jet.hessian += bj.hessian;
    for (int k = 0; k < 4; ++k) jet.third[k] += bj.third[k];
  }
  return jet;
}

Vec3 MongePatch::Normal(const Vec2& x) const {
  const Vec2 grad = Jet(x).gradient;
  return Vec3(-grad.x(), -grad.y(), 1.0).normalized();
}

const std::vector<GaussianBump>& MongePatch::bumps() const {
  static const std::vector<GaussianBump> kNone;
  const auto* a = std::get_if<AnalyticForm>(&form_);
  return a ? a->bumps : kNone;
}

const CubicHeight& MongePatch::cubic() const {
  static const CubicHeight kNone;
  const auto* a = std::get_if<AnalyticForm>(&form_);
  return a ? a->cubic : kNone;
}

const HeightGrid* MongePatch::grid() const { return std::get_if<HeightGrid>(&form_); }

LocalSurfaceFrame Canonicalize(const LocalSurfaceFrame& fr) {
  if (std::abs(fr.kappa1) >= std::abs(fr.kappa2)) return fr;
  LocalSurfaceFrame out = fr;
  out.kappa1 = fr.kappa2;
  out.kappa2 = fr.kappa1;
  out.dk1_ds = fr.dk2_dt;
  out.dk1_dt = -fr.dk2_ds;
  out.dk2_ds = fr.dk1_dt;
  out.dk2_dt = -fr.dk1_ds;
  out.phi = fr.phi + 0.5 * kPi;
  if (out.phi >= kPi) {
    out.phi -= kPi;
    out.dk1_ds = -out.dk1_ds;
    out.dk1_dt = -out.dk1_dt;
    out.dk2_ds = -out.dk2_ds;
    out.dk2_dt = -out.dk2_dt;
  }
  return out;
}

LocalSurfaceFrame FrameAt(const MongePatch& patch, const Vec2& x, double length_scale) {
  if (!patch.analytic()) {
    const HeightGrid& g = *patch.grid();
    auto node = NodeOf(g, x);
    if (!node) throw Error(ErrorCode::kInvalidArgument, "frame requested off the height grid");
    const int i = (*node)[0], j = (*node)[1];
    if (std::min({i, j, g.width - 1 - i, g.height - 1 - j}) < 4) {
      std::ostringstream msg;
      msg << "node (" << i << ", " << j << ") lacks the four-node margin needed for third order";
      throw Error(ErrorCode::kBoundaryPixel, msg.str());
    }
    const PencilFrame centre = SecondOrder(GridJet(g, i, j), length_scale);
    auto curvatures = [&](int a, int b) {
      const PencilFrame p = SecondOrder(GridJet(g, a, b), length_scale);
      return Vec2(p.kappa1, p.kappa2);
    };
    const std::array<double, 5> w = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
    Vec2 dkx = Vec2::Zero(), dky = Vec2::Zero();
    for (int o = -2; o <= 2; ++o) {
      if (w[o + 2] == 0.0) continue;
      dkx += w[o + 2] * curvatures(i + o, j);
      dky += w[o + 2] * curvatures(i, j + o);
    }
    dkx /= g.spacing;
    dky /= g.spacing;
    return Assemble(centre, Vec2(dkx(0), dky(0)), Vec2(dkx(1), dky(1)));
  }
  const HeightJet jet = patch.Jet(x);
  const PencilFrame p = SecondOrder(jet, length_scale);
  return Assemble(p, CurvatureGradient(jet, p.kappa1, p.v1), CurvatureGradient(jet, p.kappa2, p.v2));
}

FrameBasis BasisOf(const LocalSurfaceFrame& fr) {
  FrameBasis b;
  const double ct = std::cos(fr.tilt), st = std::sin(fr.tilt);
  const double cs = std::cos(fr.slant), ss = std::sin(fr.slant);
  b.U.col(0) = Vec3(cs * ct, cs * st, ss);
  b.U.col(1) = Vec3(-st, ct, 0.0);
  b.normal = b.U.col(0).cross(b.U.col(1));
  b.W = Rotation(fr.phi);
  b.Sigma << 1.0 / cs, 0.0, 0.0, 1.0;
  b.V = Rotation(fr.tilt);
  b.M = b.W.transpose() * b.Sigma * b.V.transpose();
  b.U3 << b.U, -b.normal;
  b.W3 = Mat3::Identity();
  b.W3.topLeftCorner<2, 2>() = b.W;
  return b;
}

DnDecomposition DnFromFrame(const LocalSurfaceFrame& fr) {
  const FrameBasis b = BasisOf(fr);
  DnDecomposition d;
  d.U = b.U;
  d.W = b.W;
  d.K << fr.kappa1, 0.0, 0.0, fr.kappa2;
  d.Sigma = b.Sigma;
  d.V = b.V;
  d.Dn = d.U * d.W * d.K * d.W.transpose() * d.Sigma * d.V.transpose();
  d.sqrt_det = std::abs(fr.kappa1 * fr.kappa2) / std::cos(fr.slant);
  const PinvResult p = Pinv(d.Dn);
  d.rank = p.rank;
  if (fr.kappa1 * fr.kappa2 != 0.0 && p.rank == 2) {
    const Mat2 k_inv = Eigen::Vector2d(1.0 / fr.kappa1, 1.0 / fr.kappa2).asDiagonal();
    d.DnPlus = d.V * d.Sigma.inverse() * d.W * k_inv * d.W.transpose() * d.U.transpose();
  } else {
    d.DnPlus = p.pinv;
  }
  return d;
}

Mat34 CurvatureTensorUnfolded(const LocalSurfaceFrame& fr) {
  Mat34 a;
  a << fr.dk1_ds, fr.dk1_dt, fr.dk1_dt, fr.dk2_ds,
       fr.dk1_dt, fr.dk2_ds, fr.dk2_ds, fr.dk2_dt,
       fr.kappa1 * fr.kappa1, 0.0, 0.0, fr.kappa2 * fr.kappa2;
  return a;
}

double CurvatureTensorScale(const LocalSurfaceFrame& fr) {
  return CurvatureTensorUnfolded(fr).cwiseAbs().maxCoeff();
}

namespace {

double CurvatureTensorM(const LocalSurfaceFrame& fr) {
  const double f = fr.dk1_ds, g = fr.dk1_dt, h = fr.dk2_ds, i = fr.dk2_dt;
  const double a = fr.kappa1 * fr.kappa1, b = fr.kappa2 * fr.kappa2;
  return a * (h * h - g * i) + b * (g * g - f * h);
}

bool IsDegenerate(const LocalSurfaceFrame& fr, double m) {
  const double s = CurvatureTensorScale(fr);
  return s == 0.0 || std::abs(m) < kDegenerateTol * s * s * s;
}

Mat KronSquare(const Mat2& a) { return Kron(a, a); }

}  // namespace

Mat43 CurvatureTensorPinvClosed(const LocalSurfaceFrame& fr) {
  const double m = CurvatureTensorM(fr);
  if (IsDegenerate(fr, m)) {
    std::ostringstream msg;
    msg << "curvature tensor is degenerate (m = " << m << ")";
    throw Error(ErrorCode::kDegenerate, msg.str());
  }
  const double f = fr.dk1_ds, g = fr.dk1_dt, h = fr.dk2_ds, i = fr.dk2_dt;
  const double a = fr.kappa1 * fr.kappa1, b = fr.kappa2 * fr.kappa2;
  // Adjugate of the half-vectorized tensor (determinant -m).
  Mat3 adj;
  adj << h * b, -g * b, g * i - h * h,
         i * a - g * b, f * b - h * a, g * h - f * i,
         -h * a, g * a, f * h - g * g;
  return Duplication().L * adj / (-m);
}

D2nDecomposition D2nFromFrame(const LocalSurfaceFrame& fr) {
  const FrameBasis b = BasisOf(fr);
  D2nDecomposition d;
  d.U3 = b.U3;
  d.W3 = b.W3;
  d.Aunf = CurvatureTensorUnfolded(fr);
  d.D2nUnf = d.U3 * d.W3 * d.Aunf * KronSquare(b.M);
  d.m = CurvatureTensorM(fr);
  d.det_d2n_l = (d.D2nUnf * Duplication().L).determinant();
  d.degenerate = IsDegenerate(fr, d.m);
  d.D2nPlus = d.degenerate ? Mat43(Pinv(d.D2nUnf).pinv) : D2nPinvClosed(fr);
  return d;
}

Mat43 D2nPinvClosed(const LocalSurfaceFrame& fr) {
  const FrameBasis b = BasisOf(fr);
  const Mat2 back = b.V * b.Sigma.inverse() * b.W;
  return KronSquare(back) * CurvatureTensorPinvClosed(fr) * b.W3.transpose() * b.U3.transpose();
}

Mat34 D2nMongeUnfolded(const LocalSurfaceFrame& fr) {
  const FrameBasis b = BasisOf(fr);
  const Mat2 k = Eigen::Vector2d(fr.kappa1, fr.kappa2).asDiagonal();
  const Mat34 posed = b.U3 * b.W3 * CurvatureTensorUnfolded(fr) * KronSquare(b.M);
  const Vec3 lean = b.U * b.W * k * b.W.transpose() * Vec2::UnitX();
  const Vec4 bend = Vec(b.M.transpose() * k * b.M);
  return posed - std::tan(fr.slant) * lean * bend.transpose();
}

MongePatch TaylorSurface(const LocalSurfaceFrame& fr) {
  CubicHeight c;
  c.hessian << -fr.kappa1, 0.0, 0.0, -fr.kappa2;
  c.third = {-fr.dk1_ds, -fr.dk1_dt, -fr.dk2_ds, -fr.dk2_dt};
  return MongePatch::Analytic({}, c);
}

NormalJet NormalDerivatives(const MongePatch& patch, const Vec2& x) {
  if (!patch.analytic()) {
    throw Error(ErrorCode::kInvalidArgument, "exact normal derivatives need an analytic patch");
  }
  const HeightJet jet = patch.Jet(x);
  const Vec3 raw(-jet.gradient.x(), -jet.gradient.y(), 1.0);
  const double w = raw.norm();
  NormalJet out;
  out.n = raw / w;
  std::array<Vec3, 2> d_raw;
  std::array<double, 2> dw;
  for (int k = 0; k < 2; ++k) {
    d_raw[k] = Vec3(-jet.hessian(0, k), -jet.hessian(1, k), 0.0);
    dw[k] = out.n.dot(d_raw[k]);
    out.dn.col(k) = (d_raw[k] - out.n * dw[k]) / w;
  }
  for (int c = 0; c < 4; ++c) {
    const int j = c % 2, k = c / 2;
    const Mat2 tk = ThirdSlice(jet.third, k);
    const Vec3 dd_raw(-tk(0, j), -tk(1, j), 0.0);
    const double ddw = (d_raw[j].dot(d_raw[k]) + raw.dot(dd_raw) - dw[j] * dw[k]) / w;
    out.d2n.col(c) = dd_raw / w - (d_raw[j] * dw[k] + d_raw[k] * dw[j]) / (w * w) -
                     raw * ddw / (w * w) + 2.0 * raw * dw[j] * dw[k] / (w * w * w);
  }
  return out;
}

}  // namespace patchshade
