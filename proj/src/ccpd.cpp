#include "corap/ccpd.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include "als_engine.hpp"
#include "corap/linalg.hpp"

namespace corap {

namespace {

// Conditioning of C' beyond which the algebraic step is flagged.
constexpr double kConditionLimit = 1e10;

std::vector<const Tensor3d*> core_pointers(const CompressedEnsemble& ensemble) {
  std::vector<const Tensor3d*> cores;
  cores.reserve(ensemble.cores.size());
  for (const auto& core : ensemble.cores) cores.push_back(&core);
  return cores;
}

template <typename F>
auto run_stage(const char* stage, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

void CoupledFactors::validate(const CompressedEnsemble& ensemble) const {
  require(size() == ensemble.size() && B.size() == A.size(),
          "coupled factors: one (A, B) pair per core is required");
  require(rank >= 1 && C.cols() == rank, "coupled factors: shared factor has the wrong rank");
  for (int m = 0; m < size(); ++m) {
    const auto& d = ensemble.cores[m].dims();
    require(A[m].rows() == d[0] && A[m].cols() == rank && B[m].rows() == d[1] &&
                B[m].cols() == rank && C.rows() == d[2],
            "coupled factors: shapes do not match core " + std::to_string(m + 1));
  }
}

CoupledFactors algebraic_ccpd(const CompressedEnsemble& ensemble, Index rank,
                              const AlsOptions& opts, int anchor) {
  require(ensemble.size() >= 1, "algebraic_ccpd: empty ensemble");
  require(anchor >= 1 && anchor <= ensemble.size(), "algebraic_ccpd: anchor out of range");
  const Dims3& d = ensemble.cores.front().dims();
  require(rank >= 1 && rank <= std::min({d[0], d[1], d[2]}),
          "algebraic_ccpd: rank must not exceed R'");

  const CpdResult anchor_fit = als_cpd(ensemble.cores[anchor - 1], rank, opts);

  CoupledFactors out;
  out.rank = rank;
  out.C = anchor_fit.factors.C;
  out.A.resize(ensemble.size());
  out.B.resize(ensemble.size());
  out.A[anchor - 1] = anchor_fit.factors.A;
  out.B[anchor - 1] = anchor_fit.factors.B;
  if (ensemble.size() == 1) return out;

  const Vector<double> sv = Eigen::BDCSVD<Matrix<double>>(out.C).singularValues();
  out.conditioning_warning = !(sv(sv.size() - 1) * kConditionLimit > sv(0));

  // G3^T (C'^T)^+ ~ A^(m) (.) B^(m); column r holds a_r (x) b_r, whose
  // column-stacked unvec is b_r a_r^T.
  const Matrix<double> right = pinv(out.C.transpose());
  for (int m = 0; m < ensemble.size(); ++m) {
    if (m == anchor - 1) continue;
    const Tensor3d& core = ensemble.cores[m];
    const Index ra = core.dim(1);
    const Index rb = core.dim(2);
    const Matrix<double> kr = mode3_view(core).transpose() * right;
    out.A[m].resize(ra, rank);
    out.B[m].resize(rb, rank);
    for (Index r = 0; r < rank; ++r) {
      try {
        auto [b, a] = best_rank1(unvec(kr.col(r), rb, ra));
        out.A[m].col(r) = a;
        out.B[m].col(r) = b;
      } catch (const DegenerateRank1&) {
        throw DegenerateComponent(m + 1, r + 1);
      }
    }
  }
  return out;
}

CoupledAlsResult coupled_als(const CompressedEnsemble& ensemble, const CoupledFactors& init,
                             const AlsOptions& opts) {
  opts.validate();
  init.validate(ensemble);
  detail::AlsEngine engine(core_pointers(ensemble), init.rank);
  engine.set_state(init.A, init.B, init.C);

  CoupledAlsResult result;
  result.initial_objective = engine.objective();
  auto run = detail::iterate(engine, opts);
  result.final_objective = engine.objective();
  result.history = std::move(run.history);
  result.iters = run.iters;
  result.converged = run.converged;
  if (result.final_objective <= result.initial_objective) {
    result.factors.A = engine.A();
    result.factors.B = engine.B();
    result.factors.C = engine.C();
    result.factors.rank = init.rank;
    result.factors.conditioning_warning = init.conditioning_warning;
  } else {
    result.factors = init;
    result.final_objective = result.initial_objective;
  }
  return result;
}

std::vector<double> core_residuals(const CompressedEnsemble& ensemble,
                                   const CoupledFactors& coupled) {
  coupled.validate(ensemble);
  std::vector<double> out(ensemble.size());
  for (int m = 0; m < ensemble.size(); ++m) {
    const Matrix<double> model = coupled.C * khatri_rao(coupled.A[m], coupled.B[m]).transpose();
    out[m] = (mode3_view(ensemble.cores[m]) - model).squaredNorm();
  }
  return out;
}

int select_m_opt(const CompressedEnsemble& ensemble, const CoupledFactors& coupled,
                 MOptRule rule) {
  auto residuals = core_residuals(ensemble, coupled);
  if (rule == MOptRule::FullTensorFit)
    for (int m = 0; m < ensemble.size(); ++m)
      residuals[m] -= ensemble.cores[m].data().squaredNorm();
  int best = 0;
  for (int m = 1; m < static_cast<int>(residuals.size()); ++m)
    if (residuals[m] < residuals[best]) best = m;
  return best + 1;
}

FactorTripled back_project(const CompressedEnsemble& ensemble, const CoupledFactors& coupled,
                           int m_opt) {
  require(m_opt >= 1 && m_opt <= ensemble.size() && m_opt <= coupled.size(),
          "back_project: m_opt out of range");
  const ProjectionTriad& triad = ensemble.triads[m_opt - 1];
  return FactorTripled{triad.U * coupled.A[m_opt - 1], triad.V * coupled.B[m_opt - 1],
                       *ensemble.W * coupled.C};
}

CcpdResult corap_cpd(const Tensor3d& t, const SketchConfig& cfg, const AlsOptions& opts,
                     int anchor, MOptRule rule) {
  const auto start = std::chrono::steady_clock::now();
  run_stage("config", [&] {
    cfg.validate(t.dims());
    opts.validate();
    return 0;
  });
  const CompressedEnsemble ensemble = run_stage("build_ensemble", [&] {
    return build_ensemble(t, cfg);
  });
  const CoupledFactors init = run_stage("algebraic_ccpd", [&] {
    return algebraic_ccpd(ensemble, cfg.target_rank, opts, anchor);
  });
  CcpdResult result;
  result.coupled = run_stage("coupled_als", [&] {
    return coupled_als(ensemble, init, opts).factors;
  });
  run_stage("select_m_opt", [&] {
    result.per_core_residuals = core_residuals(ensemble, result.coupled);
    result.m_opt = select_m_opt(ensemble, result.coupled, rule);
    for (int m = 0; m < ensemble.size(); ++m) {
      const double norm = frobenius_norm(ensemble.cores[m]);
      const double res = std::sqrt(result.per_core_residuals[m]);
      result.per_core_rel_residuals.push_back(norm == 0.0 ? res : res / norm);
    }
    return 0;
  });
  result.full_factors = run_stage("back_project", [&] {
    return back_project(ensemble, result.coupled, result.m_opt);
  });
  result.total_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace corap
