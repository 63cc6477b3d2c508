#pragma once

// Coupled CPD of a CoRAP ensemble and the end-to-end CoRAP-CPD pipeline.
//
// Every core G^(m) = T x1 U^(m)T x2 V^(m)T x3 W^T admits a CPD
// [[A^(m), B^(m), C']] with C' = W^T C common to all cores. The coupled
// factors are found algebraically (CPD of one anchor core, then a
// pseudoinverse against C' and per-column rank-1 extraction for the rest),
// refined by coupled ALS, and the best-fitting core is back-projected.

#include <vector>

#include "corap/cpd.hpp"
#include "corap/sketch.hpp"
#include "corap/tensor.hpp"

namespace corap {

struct CoupledFactors {
  std::vector<Matrix<double>> A;  ///< A^(m), R' x R
  std::vector<Matrix<double>> B;  ///< B^(m), R' x R
  Matrix<double> C;               ///< shared C', R' x R
  Index rank = 0;
  /// Set when C' was too ill-conditioned for a trustworthy pseudoinverse.
  bool conditioning_warning = false;

  int size() const noexcept { return static_cast<int>(A.size()); }
  void validate(const CompressedEnsemble& ensemble) const;
};

struct CoupledAlsResult {
  CoupledFactors factors;
  /// Pooled relative residual after each sweep.
  std::vector<double> history;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iters = 0;
  bool converged = false;
};

struct CcpdResult {
  CoupledFactors coupled;
  /// ||G^(m) - [[A^(m), B^(m), C']]||_F^2, the quantity m_opt minimizes.
  std::vector<double> per_core_residuals;
  /// The same residuals relative to ||G^(m)||_F (not squared).
  std::vector<double> per_core_rel_residuals;
  int m_opt = 1;  ///< 1-based power order of the selected triad
  FactorTripled full_factors;
  double total_time = 0.0;  ///< seconds
};

/// Algebraic coupled CPD. `anchor` (1-based) picks the core decomposed by ALS.
CoupledFactors algebraic_ccpd(const CompressedEnsemble& ensemble, Index rank,
                              const AlsOptions& opts, int anchor = 1);

/// Coupled ALS from `init`. Never returns a fit worse than the initializer.
CoupledAlsResult coupled_als(const CompressedEnsemble& ensemble, const CoupledFactors& init,
                             const AlsOptions& opts);

/// Squared per-core residuals ||G^(m) - [[A^(m), B^(m), C']]||_F^2.
std::vector<double> core_residuals(const CompressedEnsemble& ensemble,
                                   const CoupledFactors& coupled);

/// How the back-projected triad is chosen.
enum class MOptRule {
  /// argmin_m ||G^(m) - [[A^(m), B^(m), C']]||_F^2, the core residual.
  CoreResidual,
  /// argmin_m of the full-tensor residual ||T - back_project(m)||_F^2. With
  /// orthonormal projectors this equals ||T||^2 - ||G^(m)||^2 plus the core
  /// residual, so it costs no more than CoreResidual.
  FullTensorFit,
};

/// 1-based argmin under `rule`; ties go to the smallest m.
int select_m_opt(const CompressedEnsemble& ensemble, const CoupledFactors& coupled,
                 MOptRule rule = MOptRule::CoreResidual);

/// A = U^(m) A^(m), B = V^(m) B^(m), C = W C' for the 1-based m_opt.
FactorTripled back_project(const CompressedEnsemble& ensemble, const CoupledFactors& coupled,
                           int m_opt);

/// Ensemble -> algebraic C-CPD -> coupled ALS -> m_opt -> back-projection.
/// Rank is cfg.target_rank. Failures are rethrown as StageError.
CcpdResult corap_cpd(const Tensor3d& t, const SketchConfig& cfg, const AlsOptions& opts,
                     int anchor = 1, MOptRule rule = MOptRule::CoreResidual);

}  // namespace corap
