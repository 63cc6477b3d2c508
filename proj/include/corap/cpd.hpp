#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "corap/sketch.hpp"
#include "corap/tensor.hpp"

namespace corap {

struct AlsOptions {
  int max_iters = 500;
  /// Stop when the relative residual changes by less than this fraction.
  double rel_tol = 1e-8;
  /// Stop when the relative residual itself falls below this value.
  double residual_floor = 1e-13;
  /// Starting point; random Gaussian factors when empty.
  std::optional<FactorTripled> init;
  std::uint64_t seed = 0;
  /// Random starts tried when no init is given; the best fit is kept.
  int restarts = 1;

  void validate() const;
};

struct CpdResult {
  FactorTripled factors;
  double rel_residual = 0.0;  ///< ||T - [[A, B, C]]|| / ||T||
  int iters = 0;
  bool converged = false;
  /// Relative residual after each sweep of the returned run.
  std::vector<double> history;
};

/// Rank-R CPD by alternating least squares on the matricized normal
/// equations. Requires 1 <= R <= min(I, J, K).
CpdResult als_cpd(const Tensor3d& t, Index rank, const AlsOptions& opts);

/// RAP-CPD: one triad at power order m, ALS on the R' x R' x R' core, then
/// A = U A', B = V B', C = W C'. An init in opts is taken as core-sized
/// factors. The reported residual is measured on the full tensor.
CpdResult rap_cpd(const Tensor3d& t, const SketchConfig& cfg, int m, const AlsOptions& opts);

/// ||T - [[A, B, C]]||_F / ||T||_F.
double relative_residual(const Tensor3d& t, const FactorTripled& f);

}  // namespace corap
