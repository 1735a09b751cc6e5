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

#ifndef PATCHSHADE_TENSOR_KIT_H_
#define PATCHSHADE_TENSOR_KIT_H_

#include <array>

#include <Eigen/Dense>

namespace patchshade {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat32 = Eigen::Matrix<double, 3, 2>;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat34 = Eigen::Matrix<double, 3, 4>;
using Mat43 = Eigen::Matrix<double, 4, 3>;
using Mat = Eigen::MatrixXd;

// Relative singular-value cutoff used by Pinv().
inline constexpr double kRankTol = 1e-10;
// Absolute tolerance on |h12 - h21| accepted by Vech().
inline constexpr double kSymTol = 1e-9;

// A 3 x 2 x 2 array, e.g. the second derivative of the surface normal with
// respect to two image directions. Indices are zero based: (component, j, k).
class Tensor322 {
 public:
  Tensor322() { entries_.fill(0.0); }

  // When `sym23` is set the entries must satisfy t(i,j,k) == t(i,k,j) to
  // within kSymTol; a violation throws ErrorCode::kNonSymmetric.
  Tensor322(const std::array<double, 12>& entries, bool sym23);

  double operator()(int i, int j, int k) const { return entries_[Index(i, j, k)]; }
  double& operator()(int i, int j, int k) { return entries_[Index(i, j, k)]; }

  bool sym23() const { return sym23_; }

  // Inverse of Mode1Unfold().
  static Tensor322 Refold(const Mat34& unfolded, bool sym23 = false);

 private:
  // Storage order matches the mode-1 unfolding: column j + 2k, row i.
  static int Index(int i, int j, int k) { return i + 3 * (j + 2 * k); }

  std::array<double, 12> entries_;
  bool sym23_ = false;
};

// Column c of the unfolding holds the mode-1 fibre with (mode2, mode3) =
// (c % 2, c / 2): the enumeration (0,0), (1,0), (0,1), (1,1). Vec() uses the
// same column-major enumeration, so vec(H)^T = l^T * unfold(D2n) lines up.
Mat34 Mode1Unfold(const Tensor322& t);

// Standard Kronecker product: block (i, j) is a(i, j) * b.
Mat Kron(const Mat& a, const Mat& b);

// Column-major vectorization (h11, h21, h12, h22).
Vec4 Vec(const Mat2& h);

// Inverse of Vec().
Mat2 Matricize(const Vec4& v);

// Half-vectorization (h11, h12, h22). Throws kNonSymmetric when
// |h12 - h21| > sym_tol.
Vec3 Vech(const Mat2& h, double sym_tol = kSymTol);

// Symmetric matrix with the given half-vectorization.
Mat2 Unvech(const Vec3& v);

// vech(H)^T = vec(H)^T * L and vec(H)^T = vech(H)^T * Lplus for symmetric H.
struct DuplicationPair {
  Mat43 L;
  Mat34 Lplus;
};

const DuplicationPair& Duplication();

struct PinvResult {
  Mat pinv;
  int rank = 0;
  // Product of the retained singular values. For a full column (or row) rank
  // matrix this is sqrt(det(M^T M)) (or sqrt(det(M M^T))).
  double retained_product = 1.0;
};

// Moore-Penrose pseudo-inverse through the SVD. Singular values below
// rank_tol * sigma_max count as zero; rank deficiency is reported, not fatal.
PinvResult Pinv(const Mat& m, double rank_tol = kRankTol);

}  // namespace patchshade

#endif  // PATCHSHADE_TENSOR_KIT_H_
