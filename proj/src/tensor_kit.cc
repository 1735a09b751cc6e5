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

#include "patchshade/tensor_kit.h"

#include <cmath>
#include <sstream>

#include "patchshade/error.h"

namespace patchshade {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNonSymmetric: return "NonSymmetric";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kOutOfSupport: return "OutOfSupport";
    case ErrorCode::kDegenerate: return "Degenerate";
    case ErrorCode::kBoundaryPixel: return "BoundaryPixel";
    case ErrorCode::kFlatRegion: return "FlatRegion";
    case ErrorCode::kNonFiniteEnergy: return "NonFiniteEnergy";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Tensor322::Tensor322(const std::array<double, 12>& entries, bool sym23)
    : entries_(entries), sym23_(sym23) {
  if (!sym23) return;
  for (int i = 0; i < 3; ++i) {
    double diff = std::abs((*this)(i, 0, 1) - (*this)(i, 1, 0));
    if (diff > kSymTol) {
      std::ostringstream msg;
      msg << "tensor flagged sym23 has |t(" << i << ",0,1) - t(" << i
          << ",1,0)| = " << diff;
      throw Error(ErrorCode::kNonSymmetric, msg.str());
    }
  }
}

Tensor322 Tensor322::Refold(const Mat34& unfolded, bool sym23) {
  std::array<double, 12> e;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 3; ++i) e[Index(i, c % 2, c / 2)] = unfolded(i, c);
  }
  return Tensor322(e, sym23);
}

Mat34 Mode1Unfold(const Tensor322& t) {
  Mat34 out;
  for (int c = 0; c < 4; ++c) {
    for (int i = 0; i < 3; ++i) out(i, c) = t(i, c % 2, c / 2);
  }
  return out;
}

Mat Kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Vec4 Vec(const Mat2& h) { return Vec4(h(0, 0), h(1, 0), h(0, 1), h(1, 1)); }

Mat2 Matricize(const Vec4& v) {
  Mat2 h;
  h << v(0), v(2), v(1), v(3);
  return h;
}

Vec3 Vech(const Mat2& h, double sym_tol) {
  double diff = std::abs(h(0, 1) - h(1, 0));
  if (diff > sym_tol) {
    std::ostringstream msg;
    msg << "vech of a matrix with |h12 - h21| = " << diff << " > " << sym_tol;
    throw Error(ErrorCode::kNonSymmetric, msg.str());
  }
  return Vec3(h(0, 0), h(0, 1), h(1, 1));
}

Mat2 Unvech(const Vec3& v) {
  Mat2 h;
  h << v(0), v(1), v(1), v(2);
  return h;
}

const DuplicationPair& Duplication() {
  static const DuplicationPair pair = [] {
    DuplicationPair p;
    p.L << 1, 0, 0,
           0, 0.5, 0,
           0, 0.5, 0,
           0, 0, 1;
    p.Lplus << 1, 0, 0, 0,
               0, 1, 1, 0,
               0, 0, 0, 1;
    return p;
  }();
  return pair;
}

PinvResult Pinv(const Mat& m, double rank_tol) {
  PinvResult out;
  out.pinv = Mat::Zero(m.cols(), m.rows());
  if (m.size() == 0) return out;
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  double cutoff = rank_tol * (s.size() > 0 ? s(0) : 0.0);
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) <= cutoff || s(k) == 0.0) continue;
    ++out.rank;
    out.retained_product *= s(k);
    out.pinv += svd.matrixV().col(k) * (1.0 / s(k)) * svd.matrixU().col(k).transpose();
  }
  if (out.rank == 0) out.retained_product = 0.0;
  return out;
}

}  // namespace patchshade
