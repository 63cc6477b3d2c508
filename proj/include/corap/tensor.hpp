#pragma once

// Dense third-order tensors and the multilinear primitives built on them.
//
// Storage is row-major in (i, j, k): the third index varies fastest, so
// entry (i, j, k) lives at offset (i * J + j) * K + k. With this layout the
// mode-1 unfolding is the data viewed as an I x JK row-major matrix and the
// mode-3 unfolding is the data viewed as a K x IJ column-major matrix; only
// the mode-2 unfolding needs a copy.
//
// Public functions take 1-based mode numbers (1, 2, 3). Entry indices are
// 0-based.

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "corap/errors.hpp"

namespace corap {

using Index = Eigen::Index;
using Dims3 = std::array<Index, 3>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::string dims_string(const Dims3& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

template <typename Scalar_>
class DenseTensor3 {
 public:
  using Scalar = Scalar_;

  DenseTensor3() : dims_{0, 0, 0} {}

  explicit DenseTensor3(const Dims3& dims) : dims_(dims) {
    check_dims(dims);
    data_ = Vector<Scalar>::Zero(dims[0] * dims[1] * dims[2]);
  }

  DenseTensor3(const Dims3& dims, Vector<Scalar> data) : dims_(dims), data_(std::move(data)) {
    check_dims(dims);
    require(data_.size() == dims[0] * dims[1] * dims[2],
            "DenseTensor3: data length must equal I*J*K");
  }

  static DenseTensor3 Zero(const Dims3& dims) { return DenseTensor3(dims); }

  static DenseTensor3 Constant(const Dims3& dims, Scalar value) {
    DenseTensor3 t(dims);
    t.data_.setConstant(value);
    return t;
  }

  const Dims3& dims() const noexcept { return dims_; }
  /// Size along a 1-based mode.
  Index dim(int mode) const {
    require(mode >= 1 && mode <= 3, "mode must be 1, 2 or 3");
    return dims_[mode - 1];
  }
  Index size() const noexcept { return data_.size(); }

  Scalar& operator()(Index i, Index j, Index k) { return data_[offset(i, j, k)]; }
  const Scalar& operator()(Index i, Index j, Index k) const { return data_[offset(i, j, k)]; }

  const Vector<Scalar>& data() const noexcept { return data_; }
  Vector<Scalar>& data() noexcept { return data_; }

  /// Frontal-in-the-first-index slice t(i, :, :) as a J x K matrix view.
  auto slice(Index i) const {
    return Eigen::Map<const RowMajorMatrix<Scalar>>(data_.data() + i * dims_[1] * dims_[2],
                                                    dims_[1], dims_[2]);
  }
  auto slice(Index i) {
    return Eigen::Map<RowMajorMatrix<Scalar>>(data_.data() + i * dims_[1] * dims_[2], dims_[1],
                                              dims_[2]);
  }

  DenseTensor3& operator+=(const DenseTensor3& other) {
    require(dims_ == other.dims_, "tensor dimensions differ");
    data_ += other.data_;
    return *this;
  }
  DenseTensor3& operator-=(const DenseTensor3& other) {
    require(dims_ == other.dims_, "tensor dimensions differ");
    data_ -= other.data_;
    return *this;
  }
  DenseTensor3& operator*=(Scalar s) {
    data_ *= s;
    return *this;
  }

  friend DenseTensor3 operator+(DenseTensor3 a, const DenseTensor3& b) { return a += b; }
  friend DenseTensor3 operator-(DenseTensor3 a, const DenseTensor3& b) { return a -= b; }
  friend DenseTensor3 operator*(Scalar s, DenseTensor3 t) { return t *= s; }

  friend bool operator==(const DenseTensor3& a, const DenseTensor3& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  static void check_dims(const Dims3& d) {
    require(d[0] > 0 && d[1] > 0 && d[2] > 0, "tensor dimensions must be positive");
  }
  Index offset(Index i, Index j, Index k) const { return (i * dims_[1] + j) * dims_[2] + k; }

  Dims3 dims_;
  Vector<Scalar> data_;
};

/// The three factor matrices of a polyadic decomposition.
template <typename Scalar>
struct FactorTriple {
  Matrix<Scalar> A;
  Matrix<Scalar> B;
  Matrix<Scalar> C;

  Index rank() const noexcept { return A.cols(); }
  Dims3 dims() const noexcept { return {A.rows(), B.rows(), C.rows()}; }

  void validate() const {
    require(A.cols() > 0 && B.cols() == A.cols() && C.cols() == A.cols(),
            "factor matrices must share a positive column count");
  }

  const Matrix<Scalar>& factor(int mode) const {
    require(mode >= 1 && mode <= 3, "mode must be 1, 2 or 3");
    return mode == 1 ? A : (mode == 2 ? B : C);
  }
};

using Tensor3d = DenseTensor3<double>;
using FactorTripled = FactorTriple<double>;

// ---------------------------------------------------------------------------
// Zero-copy unfoldings

/// Mode-1 unfolding T1 (I x JK), column index j*K + k.
template <typename Scalar>
auto mode1_view(const DenseTensor3<Scalar>& t) {
  const auto& d = t.dims();
  return Eigen::Map<const RowMajorMatrix<Scalar>>(t.data().data(), d[0], d[1] * d[2]);
}

/// Mode-3 unfolding T3 (K x IJ), column index i*J + j.
template <typename Scalar>
auto mode3_view(const DenseTensor3<Scalar>& t) {
  const auto& d = t.dims();
  return Eigen::Map<const Matrix<Scalar>>(t.data().data(), d[2], d[0] * d[1]);
}

// ---------------------------------------------------------------------------
// Matricization

/// Mode-n matricization: (T1)_{i, jK+k} = (T2)_{j, iK+k} = (T3)_{k, iJ+j} = t_{ijk}.
template <typename Scalar>
Matrix<Scalar> matricize(const DenseTensor3<Scalar>& t, int mode) {
  const auto& d = t.dims();
  switch (mode) {
    case 1:
      return mode1_view(t);
    case 2: {
      Matrix<Scalar> out(d[1], d[0] * d[2]);
      for (Index i = 0; i < d[0]; ++i) out.middleCols(i * d[2], d[2]) = t.slice(i);
      return out;
    }
    case 3:
      return mode3_view(t);
    default:
      throw ContractViolation("matricize: mode must be 1, 2 or 3");
  }
}

template <typename Derived>
DenseTensor3<typename Derived::Scalar> dematricize(const Eigen::MatrixBase<Derived>& m, int mode,
                                                   const Dims3& dims) {
  using Scalar = typename Derived::Scalar;
  require(mode >= 1 && mode <= 3, "dematricize: mode must be 1, 2 or 3");
  const Index rows = dims[mode - 1];
  const Index cols = dims[0] * dims[1] * dims[2] / std::max<Index>(rows, 1);
  require(m.rows() == rows && m.cols() == cols, "dematricize: matrix shape inconsistent with dims");
  DenseTensor3<Scalar> t(dims);
  switch (mode) {
    case 1:
      Eigen::Map<RowMajorMatrix<Scalar>>(t.data().data(), rows, cols) = m;
      break;
    case 2:
      for (Index i = 0; i < dims[0]; ++i) t.slice(i) = m.middleCols(i * dims[2], dims[2]);
      break;
    case 3:
      Eigen::Map<Matrix<Scalar>>(t.data().data(), rows, cols) = m;
      break;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Products

/// t x_n G: contracts the n-th index of t with the columns of G.
template <typename Scalar, typename Derived>
DenseTensor3<Scalar> mode_n_product(const DenseTensor3<Scalar>& t,
                                    const Eigen::MatrixBase<Derived>& g, int mode) {
  require(mode >= 1 && mode <= 3, "mode_n_product: mode must be 1, 2 or 3");
  const Dims3& d = t.dims();
  require(g.cols() == d[mode - 1], "mode_n_product: column count of G must match the mode size");
  Dims3 out_dims = d;
  out_dims[mode - 1] = g.rows();
  DenseTensor3<Scalar> out(out_dims);
  switch (mode) {
    case 1:
      Eigen::Map<RowMajorMatrix<Scalar>>(out.data().data(), g.rows(), d[1] * d[2]).noalias() =
          g * mode1_view(t);
      break;
    case 2:
      for (Index i = 0; i < d[0]; ++i) out.slice(i).noalias() = g * t.slice(i);
      break;
    case 3:
      Eigen::Map<Matrix<Scalar>>(out.data().data(), g.rows(), d[0] * d[1]).noalias() =
          g * mode3_view(t);
      break;
  }
  return out;
}

/// Column-wise Kronecker product; row index of column r is i * J + j.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> khatri_rao(const Eigen::MatrixBase<DerivedA>& a,
                                             const Eigen::MatrixBase<DerivedB>& b) {
  require(a.cols() == b.cols(), "khatri_rao: column counts differ");
  const Index I = a.rows();
  const Index J = b.rows();
  Matrix<typename DerivedA::Scalar> out(I * J, a.cols());
  for (Index r = 0; r < a.cols(); ++r)
    for (Index i = 0; i < I; ++i) out.col(r).segment(i * J, J) = a(i, r) * b.col(r);
  return out;
}

/// Sum of rank-1 terms a_r o b_r o c_r.
template <typename Scalar>
DenseTensor3<Scalar> cpd_reconstruct(const FactorTriple<Scalar>& f) {
  f.validate();
  const Dims3 d = f.dims();
  DenseTensor3<Scalar> t(d);
  Eigen::Map<RowMajorMatrix<Scalar>>(t.data().data(), d[0], d[1] * d[2]).noalias() =
      f.A * khatri_rao(f.B, f.C).transpose();
  return t;
}

// ---------------------------------------------------------------------------
// Vectorization (column stacking: entry (i, j) goes to position j * rows + i)

template <typename Derived>
Vector<typename Derived::Scalar> vec(const Eigen::MatrixBase<Derived>& m) {
  return m.eval().reshaped();
}

template <typename Derived>
Matrix<typename Derived::Scalar> unvec(const Eigen::MatrixBase<Derived>& v, Index rows,
                                       Index cols) {
  require(v.cols() == 1 || v.rows() == 1, "unvec: input must be a vector");
  require(rows >= 0 && cols >= 0 && rows * cols == v.size(), "unvec: rows*cols must equal length");
  return v.eval().reshaped(rows, cols);
}

template <typename Scalar>
Scalar frobenius_norm(const DenseTensor3<Scalar>& t) {
  return t.data().norm();
}

}  // namespace corap
