#pragma once

// Matrix kernels used by the sketching and decomposition stages.
//
// Column signs of Q (QR) and U (SVD) are fixed so that the first entry of
// each column that is not at roundoff level is nonnegative; the paired
// factor (rows of R, columns of V) is flipped with it.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <utility>

#include <Eigen/Dense>

#include "corap/errors.hpp"
#include "corap/tensor.hpp"

namespace corap {

template <typename Scalar>
struct QrFactors {
  Matrix<Scalar> Q;
  Matrix<Scalar> R;
};

template <typename Scalar>
struct TruncatedSvd {
  Matrix<Scalar> U;
  Vector<Scalar> s;
  Matrix<Scalar> V;
};

namespace detail {

// Index of the first entry whose magnitude exceeds roundoff relative to the
// column norm, or -1 for a zero column.
template <typename Derived>
Index leading_entry(const Eigen::MatrixBase<Derived>& col) {
  using Real = typename Derived::RealScalar;
  const Real cutoff = Real(16) * std::numeric_limits<Real>::epsilon() * col.norm();
  for (Index i = 0; i < col.size(); ++i)
    if (std::abs(col(i)) > cutoff) return i;
  return -1;
}

}  // namespace detail

/// Economy QR of a p x q matrix with p >= q. Rank-deficient input is allowed;
/// R then has (near) zero diagonal entries and Q stays orthonormal.
template <typename Derived>
QrFactors<typename Derived::Scalar> economy_qr(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  require(m.rows() >= m.cols(), "economy_qr: requires rows >= cols");
  const Index p = m.rows();
  const Index q = m.cols();
  Eigen::HouseholderQR<Matrix<Scalar>> qr(m);
  QrFactors<Scalar> out;
  out.Q = qr.householderQ() * Matrix<Scalar>::Identity(p, q);
  out.R = qr.matrixQR().topRows(q).template triangularView<Eigen::Upper>();
  for (Index c = 0; c < q; ++c) {
    const Index lead = detail::leading_entry(out.Q.col(c));
    if (lead >= 0 && out.Q(lead, c) < Scalar(0)) {
      out.Q.col(c) *= Scalar(-1);
      out.R.row(c) *= Scalar(-1);
    }
  }
  return out;
}

/// Top-r singular triplets.
template <typename Derived>
TruncatedSvd<typename Derived::Scalar> truncated_svd(const Eigen::MatrixBase<Derived>& m,
                                                     Index r) {
  using Scalar = typename Derived::Scalar;
  require(r >= 1 && r <= std::min(m.rows(), m.cols()), "truncated_svd: r out of range");
  Eigen::BDCSVD<Matrix<Scalar>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TruncatedSvd<Scalar> out;
  out.U = svd.matrixU().leftCols(r);
  out.s = svd.singularValues().head(r);
  out.V = svd.matrixV().leftCols(r);
  for (Index c = 0; c < r; ++c) {
    const Index lead = detail::leading_entry(out.U.col(c));
    if (lead >= 0 && out.U(lead, c) < Scalar(0)) {
      out.U.col(c) *= Scalar(-1);
      out.V.col(c) *= Scalar(-1);
    }
  }
  return out;
}

/// Best Frobenius rank-1 approximation u v^T with the singular value folded
/// into u and v of unit norm. Throws DegenerateRank1 on an all-zero input.
template <typename Derived>
std::pair<Vector<typename Derived::Scalar>, Vector<typename Derived::Scalar>> best_rank1(
    const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0 || m.cwiseAbs().maxCoeff() == Scalar(0))
    throw DegenerateRank1("best_rank1: zero matrix has no dominant direction");
  auto svd = truncated_svd(m, 1);
  return {svd.s(0) * svd.U.col(0), svd.V.col(0)};
}

/// Moore-Penrose pseudoinverse; singular values at or below
/// max(rows, cols) * eps * sigma_max are treated as zero.
template <typename Derived>
Matrix<typename Derived::Scalar> pinv(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0) return Matrix<Scalar>::Zero(m.cols(), m.rows());
  Eigen::BDCSVD<Matrix<Scalar>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const Scalar cutoff = Scalar(std::max(m.rows(), m.cols())) *
                        std::numeric_limits<Scalar>::epsilon() * (s.size() ? s(0) : Scalar(0));
  Vector<Scalar> inv = Vector<Scalar>::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) inv(i) = Scalar(1) / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// ---------------------------------------------------------------------------
// Power-iterated sketches

/// Anything that can apply a matrix T and its transpose to a block of vectors.
template <typename Op>
concept LinearOperator = requires(const Op& op, const Matrix<typename Op::Scalar>& x) {
  { op.rows() } -> std::convertible_to<Index>;
  { op.cols() } -> std::convertible_to<Index>;
  { op.apply(x) } -> std::convertible_to<Matrix<typename Op::Scalar>>;
  { op.apply_adjoint(x) } -> std::convertible_to<Matrix<typename Op::Scalar>>;
};

/// Adapts any Eigen matrix (or map) to LinearOperator. Holds a reference.
template <typename Derived>
class MatrixOperator {
 public:
  using Scalar = typename Derived::Scalar;

  explicit MatrixOperator(const Derived& m) : m_(m) {}

  Index rows() const { return m_.rows(); }
  Index cols() const { return m_.cols(); }
  Matrix<Scalar> apply(const Matrix<Scalar>& x) const { return m_ * x; }
  Matrix<Scalar> apply_adjoint(const Matrix<Scalar>& y) const { return m_.transpose() * y; }

 private:
  const Derived& m_;
};

template <typename Derived>
MatrixOperator<Derived> make_operator(const Eigen::MatrixBase<Derived>& m) {
  return MatrixOperator<Derived>(m.derived());
}

/// Sketch T (T^T T)^... of power order `power`: starting from Y = T * omega,
/// each sweep re-orthonormalizes, applies T^T, re-orthonormalizes and applies
/// T. The returned p x R' block spans the same space as (T T^T)^power T omega
/// but is never formed through explicit powers.
template <LinearOperator Op>
Matrix<typename Op::Scalar> power_sketch(const Op& op, const Matrix<typename Op::Scalar>& omega,
                                         int power) {
  require(power >= 0, "power_sketch: power order must be nonnegative");
  require(omega.rows() == op.cols(), "power_sketch: test matrix rows must match operator columns");
  require(omega.cols() >= 1 && omega.cols() <= std::min(op.rows(), op.cols()),
          "power_sketch: sketch width exceeds the smaller operator dimension");
  Matrix<typename Op::Scalar> y = op.apply(omega);
  for (int sweep = 0; sweep < power; ++sweep) {
    auto z = economy_qr(op.apply_adjoint(economy_qr(y).Q)).Q;
    y = op.apply(z);
  }
  return y;
}

/// Orthonormal basis of the order-`power` sketch.
template <LinearOperator Op>
Matrix<typename Op::Scalar> normalized_subspace_iteration(
    const Op& op, const Matrix<typename Op::Scalar>& omega, int power) {
  return economy_qr(power_sketch(op, omega, power)).Q;
}

}  // namespace corap
