#include "als_engine.hpp"

#include <cmath>

#include "corap/linalg.hpp"

namespace corap::detail {

AlsEngine::AlsEngine(std::vector<const Tensor3d*> tensors, Index rank)
    : tensors_(std::move(tensors)), rank_(rank) {
  require(!tensors_.empty(), "ALS needs at least one tensor");
  require(rank_ >= 1, "ALS rank must be positive");
  const Index K = tensors_.front()->dim(3);
  mode2_.reserve(tensors_.size());
  for (const Tensor3d* t : tensors_) {
    require(t->dim(3) == K, "coupled tensors must share the third dimension");
    mode2_.push_back(matricize(*t, 2));
    total_norm_sq_ += t->data().squaredNorm();
  }
}

void AlsEngine::set_state(std::vector<Matrix<double>> A, std::vector<Matrix<double>> B,
                          Matrix<double> C) {
  require(static_cast<int>(A.size()) == size() && static_cast<int>(B.size()) == size(),
          "ALS: one (A, B) pair per tensor is required");
  for (int m = 0; m < size(); ++m) {
    const auto& d = tensors_[m]->dims();
    require(A[m].rows() == d[0] && A[m].cols() == rank_ && B[m].rows() == d[1] &&
                B[m].cols() == rank_,
            "ALS: initial factor shapes do not match the tensor");
  }
  require(C.rows() == tensors_.front()->dim(3) && C.cols() == rank_,
          "ALS: initial third-mode factor shape does not match");
  A_ = std::move(A);
  B_ = std::move(B);
  C_ = std::move(C);
}

void AlsEngine::sweep() {
  const Matrix<double> ctc = C_.transpose() * C_;
  for (int m = 0; m < size(); ++m) {
    const Tensor3d& t = *tensors_[m];
    {
      const Matrix<double> gram = (B_[m].transpose() * B_[m]).cwiseProduct(ctc);
      const Matrix<double> mttkrp = mode1_view(t) * khatri_rao(B_[m], C_);
      A_[m] = mttkrp * pinv(gram);
    }
    {
      const Matrix<double> gram = (A_[m].transpose() * A_[m]).cwiseProduct(ctc);
      const Matrix<double> mttkrp = mode2_[m] * khatri_rao(A_[m], C_);
      B_[m] = mttkrp * pinv(gram);
    }
  }
  Matrix<double> gram = Matrix<double>::Zero(rank_, rank_);
  Matrix<double> mttkrp = Matrix<double>::Zero(C_.rows(), rank_);
  for (int m = 0; m < size(); ++m) {
    gram += (A_[m].transpose() * A_[m]).cwiseProduct(B_[m].transpose() * B_[m]);
    mttkrp.noalias() += mode3_view(*tensors_[m]) * khatri_rao(A_[m], B_[m]);
  }
  C_ = mttkrp * pinv(gram);
  normalize();
}

// Unit-norm columns for the anchor pair (A^(1), B^(1)); the scale moves into
// C, and the other tensors' B^(m) are divided by the same scale so every
// reconstruction is unchanged.
void AlsEngine::normalize() {
  for (Index r = 0; r < rank_; ++r) {
    const double na = A_[0].col(r).norm();
    const double nb = B_[0].col(r).norm();
    if (na == 0.0 || nb == 0.0) continue;
    const double scale = na * nb;
    A_[0].col(r) /= na;
    B_[0].col(r) /= nb;
    C_.col(r) *= scale;
    for (int m = 1; m < size(); ++m) B_[m].col(r) /= scale;
  }
}

double AlsEngine::residual_sq(int m) const {
  const Matrix<double> model = C_ * khatri_rao(A_[m], B_[m]).transpose();
  return (mode3_view(*tensors_[m]) - model).squaredNorm();
}

double AlsEngine::objective() const {
  double total = 0.0;
  for (int m = 0; m < size(); ++m) total += residual_sq(m);
  return total;
}

double AlsEngine::relative_residual() const {
  const double obj = objective();
  if (total_norm_sq_ == 0.0) return std::sqrt(obj);
  return std::sqrt(obj / total_norm_sq_);
}

}  // namespace corap::detail
