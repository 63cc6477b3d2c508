#include "corap/cpd.hpp"

#include <algorithm>
#include <cmath>

#include "als_engine.hpp"
#include "corap/random.hpp"

namespace corap {

namespace detail {

AlsRun iterate(AlsEngine& engine, const AlsOptions& opts) {
  AlsRun run;
  double previous = 0.0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    engine.sweep();
    const double current = engine.relative_residual();
    run.history.push_back(current);
    run.iters = it;
    if (current <= opts.residual_floor ||
        (it > 1 && std::abs(previous - current) <= opts.rel_tol * previous)) {
      run.converged = true;
      break;
    }
    previous = current;
  }
  return run;
}

}  // namespace detail

void AlsOptions::validate() const {
  require(max_iters >= 1, "max_iters must be at least 1");
  require(rel_tol >= 0.0, "rel_tol must be nonnegative");
  require(residual_floor >= 0.0, "residual_floor must be nonnegative");
  require(restarts >= 1, "restarts must be at least 1");
}

double relative_residual(const Tensor3d& t, const FactorTripled& f) {
  require(f.dims() == t.dims(), "factor shapes do not match the tensor");
  const Matrix<double> model = f.C * khatri_rao(f.A, f.B).transpose();
  const double diff = (mode3_view(t) - model).norm();
  const double norm = frobenius_norm(t);
  return norm == 0.0 ? diff : diff / norm;
}

CpdResult als_cpd(const Tensor3d& t, Index rank, const AlsOptions& opts) {
  opts.validate();
  const auto& d = t.dims();
  require(rank >= 1 && rank <= std::min({d[0], d[1], d[2]}),
          "als_cpd: rank must lie in [1, min(I, J, K)]");

  detail::AlsEngine engine({&t}, rank);
  CpdResult best;
  bool have_best = false;
  const int starts = opts.init ? 1 : opts.restarts;
  for (int start = 0; start < starts; ++start) {
    if (opts.init) {
      const auto& f = *opts.init;
      require(f.rank() == rank, "als_cpd: initial factors have the wrong rank");
      engine.set_state({f.A}, {f.B}, f.C);
    } else {
      Rng rng(derive_seed(opts.seed, {0x616c73ULL, static_cast<std::uint64_t>(start)}));
      Matrix<double> A = gaussian_matrix(d[0], rank, rng);
      Matrix<double> B = gaussian_matrix(d[1], rank, rng);
      Matrix<double> C = gaussian_matrix(d[2], rank, rng);
      engine.set_state({std::move(A)}, {std::move(B)}, std::move(C));
    }
    auto run = detail::iterate(engine, opts);
    const double residual = run.history.back();
    if (!have_best || residual < best.rel_residual) {
      best.factors = FactorTripled{engine.A()[0], engine.B()[0], engine.C()};
      best.rel_residual = residual;
      best.iters = run.iters;
      best.converged = run.converged;
      best.history = std::move(run.history);
      have_best = true;
    }
  }
  return best;
}

CpdResult rap_cpd(const Tensor3d& t, const SketchConfig& cfg, int m, const AlsOptions& opts) {
  const auto& d = t.dims();
  require(cfg.target_rank >= 1 && cfg.target_rank <= cfg.oversampled_rank,
          "rap_cpd: target rank must lie in [1, R']");
  require(cfg.oversampled_rank <= std::min({d[0], d[1], d[2]}),
          "rap_cpd: R' exceeds a tensor dimension");
  const ProjectionTriad triad = build_rap_projectors(t, cfg, m);
  const Tensor3d core = compress(t, triad);
  CpdResult result = als_cpd(core, cfg.target_rank, opts);
  result.factors.A = triad.U * result.factors.A;
  result.factors.B = triad.V * result.factors.B;
  result.factors.C = *triad.W * result.factors.C;
  result.rel_residual = relative_residual(t, result.factors);
  return result;
}

}  // namespace corap
