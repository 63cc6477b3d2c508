#pragma once

// Block coordinate descent shared by single-tensor ALS and coupled ALS.
//
// The engine fits M tensors G^(m) ~ [[A^(m), B^(m), C]] with one shared
// third-mode factor C. A sweep updates A^(1), B^(1), ..., A^(M), B^(M) from
// their own tensor and then C from all tensors pooled, after which column
// scales are renormalized. With M = 1 this is textbook CP-ALS.

#include <vector>

#include "corap/cpd.hpp"
#include "corap/tensor.hpp"

namespace corap::detail {

class AlsEngine {
 public:
  AlsEngine(std::vector<const Tensor3d*> tensors, Index rank);

  void set_state(std::vector<Matrix<double>> A, std::vector<Matrix<double>> B, Matrix<double> C);

  void sweep();

  /// Squared residual of tensor m under the current factors.
  double residual_sq(int m) const;
  /// Sum over tensors of residual_sq.
  double objective() const;
  /// sqrt(objective / sum of squared tensor norms).
  double relative_residual() const;

  int size() const noexcept { return static_cast<int>(tensors_.size()); }
  Index rank() const noexcept { return rank_; }
  const std::vector<Matrix<double>>& A() const noexcept { return A_; }
  const std::vector<Matrix<double>>& B() const noexcept { return B_; }
  const Matrix<double>& C() const noexcept { return C_; }

 private:
  void normalize();

  std::vector<const Tensor3d*> tensors_;
  std::vector<Matrix<double>> mode2_;  // cached mode-2 unfoldings
  double total_norm_sq_ = 0.0;
  Index rank_;
  std::vector<Matrix<double>> A_;
  std::vector<Matrix<double>> B_;
  Matrix<double> C_;
};

struct AlsRun {
  int iters = 0;
  bool converged = false;
  std::vector<double> history;
};

/// Sweeps an engine whose state is already set until the stopping rule in
/// opts fires, recording the pooled relative residual after every sweep.
AlsRun iterate(AlsEngine& engine, const AlsOptions& opts);

}  // namespace corap::detail
