#include <memory>

#include "doctest.h"
#include "oracles.hpp"

#include "corap/bench.hpp"
#include "corap/ccpd.hpp"
#include "corap/linalg.hpp"

using namespace corap;

namespace {

SketchConfig sketch(Index r, Index rp, int M, std::uint64_t seed = 5) {
  SketchConfig cfg;
  cfg.target_rank = r;
  cfg.oversampled_rank = rp;
  cfg.max_power = M;
  cfg.seed = seed;
  return cfg;
}

AlsOptions options(std::uint64_t seed, int restarts = 3) {
  AlsOptions o;
  o.seed = seed;
  o.restarts = restarts;
  return o;
}

double core_rel_residual(const Tensor3d& core, const Matrix<double>& A, const Matrix<double>& B,
                         const Matrix<double>& C) {
  return oracle::relative_diff(core, oracle::reconstruct(A, B, C));
}

// The exact coupled factors of a noiseless ensemble.
CoupledFactors projected_truth(const CompressedEnsemble& ens, const FactorTripled& truth) {
  CoupledFactors f;
  f.rank = truth.rank();
  f.C = ens.W->transpose() * truth.C;
  for (const auto& tr : ens.triads) {
    f.A.push_back(tr.U.transpose() * truth.A);
    f.B.push_back(tr.V.transpose() * truth.B);
  }
  return f;
}

// Ensemble of identical raw copies with identity projectors.
CompressedEnsemble identity_ensemble(const Tensor3d& t, int M) {
  CompressedEnsemble ens;
  ens.W = std::make_shared<const Matrix<double>>(Matrix<double>::Identity(t.dim(3), t.dim(3)));
  for (int m = 1; m <= M; ++m) {
    ens.cores.push_back(t);
    ens.triads.push_back({Matrix<double>::Identity(t.dim(1), t.dim(1)),
                          Matrix<double>::Identity(t.dim(2), t.dim(2)), ens.W, m});
  }
  return ens;
}

}  // namespace

TEST_SUITE("ccpd_solver") {

TEST_CASE("algebraic C-CPD is exact on noiseless data") {
  const auto inst = generate_instance({30, 30, 30}, 3, kNoiseless, 1);
  const auto ens = build_ensemble(inst.tensor, sketch(3, 6, 2));
  const auto f = algebraic_ccpd(ens, 3, options(2));
  REQUIRE(f.size() == 2);
  CHECK_NOTHROW(f.validate(ens));
  CHECK_FALSE(f.conditioning_warning);
  for (int m = 0; m < 2; ++m)
    CHECK(core_rel_residual(ens.cores[m], f.A[m], f.B[m], f.C) < 1e-8);
}

TEST_CASE("algebraic C-CPD with one core is the single-core ALS fit") {
  const auto inst = generate_instance({20, 20, 20}, 3, 10.0, 3);
  const auto ens = build_ensemble(inst.tensor, sketch(3, 6, 1));
  const auto f = algebraic_ccpd(ens, 3, options(4));
  const auto single = als_cpd(ens.cores[0], 3, options(4));
  REQUIRE(f.size() == 1);
  CHECK(f.A[0] == single.factors.A);
  CHECK(f.B[0] == single.factors.B);
  CHECK(f.C == single.factors.C);
}

TEST_CASE("unvectorized pseudoinverse columns are rank one") {
  const auto inst = generate_instance({25, 25, 25}, 3, kNoiseless, 5);
  const auto ens = build_ensemble(inst.tensor, sketch(3, 6, 3));
  const auto f = algebraic_ccpd(ens, 3, options(6));
  const Matrix<double> right = pinv(Matrix<double>(f.C.transpose()));
  for (int m = 1; m < 3; ++m) {
    const Matrix<double> kr = oracle::matricize(ens.cores[m], 3).transpose() * right;
    for (Index r = 0; r < 3; ++r) {
      const auto s = oracle::reference_singular_values(unvec(kr.col(r), 6, 6));
      CHECK(s(1) < 1e-8 * s(0));
    }
  }
}

TEST_CASE("pseudoinverse step reproduces the Khatri-Rao product") {
  const auto inst = generate_instance({25, 25, 25}, 3, kNoiseless, 7);
  const auto ens = build_ensemble(inst.tensor, sketch(3, 6, 2));
  const auto exact = projected_truth(ens, inst.truth);
  const Matrix<double> right = pinv(Matrix<double>(exact.C.transpose()));
  for (int m = 0; m < 2; ++m) {
    const Matrix<double> kr = oracle::matricize(ens.cores[m], 3).transpose() * right;
    Matrix<double> want(36, 3);
    for (Index r = 0; r < 3; ++r) want.col(r) = oracle::kron(exact.A[m].col(r), exact.B[m].col(r));
    CHECK(oracle::relative_diff(want, kr) < 1e-7);
  }
}

TEST_CASE("a zero component is reported with its index") {
  const auto inst = generate_instance({20, 20, 20}, 2, kNoiseless, 8);
  auto ens = build_ensemble(inst.tensor, sketch(2, 4, 2));
  ens.cores[1] = Tensor3d(ens.cores[1].dims());
  try {
    algebraic_ccpd(ens, 2, options(9));
    FAIL("expected a degenerate component");
  } catch (const DegenerateComponent& e) {
    CHECK(e.core() == 2);
    CHECK(e.component() == 1);
  }
}

TEST_CASE("algebraic C-CPD honours the anchor and validates it") {
  const auto inst = generate_instance({20, 20, 20}, 2, kNoiseless, 10);
  const auto ens = build_ensemble(inst.tensor, sketch(2, 4, 2));
  const auto f = algebraic_ccpd(ens, 2, options(11), 2);
  for (int m = 0; m < 2; ++m)
    CHECK(core_rel_residual(ens.cores[m], f.A[m], f.B[m], f.C) < 1e-8);
  CHECK_THROWS_AS(algebraic_ccpd(ens, 2, options(11), 3), ContractViolation);
  CHECK_THROWS_AS(algebraic_ccpd(ens, 5, options(11)), ContractViolation);
}

TEST_CASE("coupled ALS fixed point") {
  const auto inst = generate_instance({20, 20, 20}, 3, kNoiseless, 12);
  const auto ens = build_ensemble(inst.tensor, sketch(3, 6, 2));
  const auto res = coupled_als(ens, projected_truth(ens, inst.truth), options(13));
  CHECK(res.converged);
  CHECK(res.iters <= 2);
  CHECK(res.final_objective < 1e-20);
}

TEST_CASE("coupled ALS on one core iterates exactly like als_cpd") {
  const auto inst = generate_instance({20, 20, 20}, 3, 0.0, 14);
  const auto ens = build_ensemble(inst.tensor, sketch(3, 6, 1));
  CoupledFactors init;
  init.rank = 3;
  init.A = {gaussian_matrix(6, 3, 15)};
  init.B = {gaussian_matrix(6, 3, 16)};
  init.C = gaussian_matrix(6, 3, 17);
  AlsOptions o = options(18, 1);
  o.max_iters = 40;
  o.rel_tol = 0;
  const auto coupled = coupled_als(ens, init, o);
  o.init = FactorTripled{init.A[0], init.B[0], init.C};
  const auto single = als_cpd(ens.cores[0], 3, o);
  CHECK(coupled.history == single.history);
  CHECK(coupled.factors.A[0] == single.factors.A);
  CHECK(coupled.factors.C == single.factors.C);
}

TEST_CASE("coupled ALS never ends worse than its initializer") {
  for (std::uint64_t seed : {19, 20, 21}) {
    const auto inst = generate_instance({30, 30, 30}, 3, 0.0, seed);
    const auto ens = build_ensemble(inst.tensor, sketch(3, 6, 3, seed));
    const auto init = algebraic_ccpd(ens, 3, options(seed));
    const auto res = coupled_als(ens, init, options(seed));
    CHECK(res.final_objective <= res.initial_objective);
    double pooled = 0.0;
    for (double r : core_residuals(ens, res.factors)) pooled += r;
    CHECK(std::abs(pooled - res.final_objective) <= 1e-10 * pooled);
  }
}

TEST_CASE("coupled ALS objective is nonincreasing") {
  const auto inst = generate_instance({25, 25, 25}, 4, -2.0, 22);
  const auto ens = build_ensemble(inst.tensor, sketch(4, 8, 3));
  CoupledFactors init;
  init.rank = 4;
  for (int m = 0; m < 3; ++m) {
    init.A.push_back(gaussian_matrix(8, 4, 23 + m));
    init.B.push_back(gaussian_matrix(8, 4, 33 + m));
  }
  init.C = gaussian_matrix(8, 4, 43);
  AlsOptions o = options(44, 1);
  o.rel_tol = 0;
  o.max_iters = 60;
  const auto res = coupled_als(ens, init, o);
  for (std::size_t i = 1; i < res.history.size(); ++i)
    CHECK(res.history[i] <= res.history[i - 1] + 1e-12);
}

TEST_CASE("coupled ALS rejects mismatched shapes") {
  const auto inst = generate_instance({15, 15, 15}, 2, kNoiseless, 45);
  const auto ens = build_ensemble(inst.tensor, sketch(2, 4, 2));
  auto init = projected_truth(ens, inst.truth);
  init.A.pop_back();
  CHECK_THROWS_AS(coupled_als(ens, init, options(1)), ContractViolation);
}

TEST_CASE("select_m_opt single candidate and forced-worst core") {
  const auto inst = generate_instance({20, 20, 20}, 3, kNoiseless, 46);
  const auto one = build_ensemble(inst.tensor, sketch(3, 6, 1));
  CHECK(select_m_opt(one, algebraic_ccpd(one, 3, options(47))) == 1);

  const auto two = build_ensemble(inst.tensor, sketch(3, 6, 2));
  auto f = algebraic_ccpd(two, 3, options(47));
  f.A[1].setZero();
  CHECK(select_m_opt(two, f) == 1);
  CHECK(select_m_opt(two, f, MOptRule::FullTensorFit) == 1);
}

TEST_CASE("select_m_opt ties go to the smallest m") {
  const auto inst = generate_instance({6, 6, 6}, 2, kNoiseless, 48);
  const auto ens = identity_ensemble(inst.tensor, 3);
  CoupledFactors f;
  f.rank = 2;
  f.C = inst.truth.C;
  for (int m = 0; m < 3; ++m) {
    f.A.push_back(inst.truth.A);
    f.B.push_back(inst.truth.B);
  }
  CHECK(select_m_opt(ens, f) == 1);
}

TEST_CASE("select_m_opt matches brute-force residuals") {
  const auto inst = generate_instance({30, 30, 30}, 3, 0.0, 49);
  const auto ens = build_ensemble(inst.tensor, sketch(3, 6, 3));
  const auto f = coupled_als(ens, algebraic_ccpd(ens, 3, options(50)), options(50)).factors;
  std::vector<double> core(3), full(3);
  for (int m = 0; m < 3; ++m) {
    const Tensor3d fit = oracle::reconstruct(f.A[m], f.B[m], f.C);
    core[m] = (ens.cores[m].data() - fit.data()).squaredNorm();
    const auto bp = back_project(ens, f, m + 1);
    const Tensor3d full_fit = oracle::reconstruct(bp.A, bp.B, bp.C);
    full[m] = (inst.tensor.data() - full_fit.data()).squaredNorm();
  }
  const auto residuals = core_residuals(ens, f);
  for (int m = 0; m < 3; ++m) CHECK(std::abs(residuals[m] - core[m]) <= 1e-10 * core[m]);
  const auto argmin = [](const std::vector<double>& v) {
    return static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin()) + 1;
  };
  CHECK(select_m_opt(ens, f) == argmin(core));
  CHECK(select_m_opt(ens, f, MOptRule::FullTensorFit) == argmin(full));
}

TEST_CASE("back_project with identity projectors is the identity") {
  const auto inst = generate_instance({6, 6, 6}, 2, kNoiseless, 51);
  const auto ens = identity_ensemble(inst.tensor, 2);
  const auto f = algebraic_ccpd(ens, 2, options(52));
  const auto full = back_project(ens, f, 2);
  CHECK(full.A == f.A[1]);
  CHECK(full.B == f.B[1]);
  CHECK(full.C == f.C);
  CHECK_THROWS_AS(back_project(ens, f, 0), ContractViolation);
  CHECK_THROWS_AS(back_project(ens, f, 3), ContractViolation);
}

TEST_CASE("back_project reconstructs the tensor and is an isometry") {
  const auto inst = generate_instance({30, 30, 30}, 3, kNoiseless, 53);
  const auto ens = build_ensemble(inst.tensor, sketch(3, 6, 2));
  const auto f = algebraic_ccpd(ens, 3, options(54));
  for (int m = 1; m <= 2; ++m) {
    const auto full = back_project(ens, f, m);
    CHECK(oracle::relative_diff(inst.tensor, cpd_reconstruct(full)) < 1e-8);
    CHECK(std::abs(full.A.norm() - f.A[m - 1].norm()) < 1e-12 * f.A[m - 1].norm());
    CHECK(std::abs(full.B.norm() - f.B[m - 1].norm()) < 1e-12 * f.B[m - 1].norm());
  }
}

TEST_CASE("CoRAP-CPD recovers a noiseless tensor") {
  const auto inst = generate_instance({50, 50, 50}, 5, kNoiseless, 55);
  const auto res = corap_cpd(inst.tensor, sketch(5, 10, 2), options(56, 5));
  CHECK(mean_relative_error(inst.truth, res.full_factors) < 1e-6);
  CHECK(res.m_opt >= 1);
  CHECK(res.m_opt <= 2);
  REQUIRE(res.per_core_residuals.size() == 2);
  REQUIRE(res.per_core_rel_residuals.size() == 2);
  CHECK(res.total_time > 0);
  const auto ens = build_ensemble(inst.tensor, sketch(5, 10, 2));
  for (int m = 0; m < 2; ++m) {
    CHECK(res.per_core_residuals[res.m_opt - 1] <= res.per_core_residuals[m]);
    const double rel = std::sqrt(res.per_core_residuals[m]) / frobenius_norm(ens.cores[m]);
    CHECK(res.per_core_rel_residuals[m] == doctest::Approx(rel).epsilon(1e-12));
  }
}

TEST_CASE("CoRAP-CPD without compression matches coupled ALS on raw copies") {
  const auto inst = generate_instance({6, 6, 6}, 3, kNoiseless, 57);
  const auto res = corap_cpd(inst.tensor, sketch(3, 6, 2), options(58));
  const auto ens = identity_ensemble(inst.tensor, 2);
  const auto raw = coupled_als(ens, algebraic_ccpd(ens, 3, options(58)), options(58));
  const auto raw_full = back_project(ens, raw.factors, 1);
  CHECK(oracle::relative_diff(inst.tensor, cpd_reconstruct(res.full_factors)) < 1e-8);
  CHECK(oracle::relative_diff(inst.tensor, cpd_reconstruct(raw_full)) < 1e-8);
  CHECK(std::abs(mean_relative_error(inst.truth, res.full_factors) -
                 mean_relative_error(inst.truth, raw_full)) < 1e-6);
}

TEST_CASE("CoRAP-CPD is bit-deterministic under a fixed seed") {
  const auto inst = generate_instance({30, 30, 30}, 3, 2.0, 59);
  const auto a = corap_cpd(inst.tensor, sketch(3, 6, 3, 60), options(61));
  const auto b = corap_cpd(inst.tensor, sketch(3, 6, 3, 60), options(61));
  CHECK(a.m_opt == b.m_opt);
  CHECK(a.per_core_residuals == b.per_core_residuals);
  CHECK(a.full_factors.A == b.full_factors.A);
  CHECK(a.full_factors.B == b.full_factors.B);
  CHECK(a.full_factors.C == b.full_factors.C);
  for (int m = 0; m < 3; ++m) CHECK(a.coupled.A[m] == b.coupled.A[m]);
}

TEST_CASE("CoRAP-CPD names the failing stage") {
  const auto inst = generate_instance({10, 10, 10}, 2, kNoiseless, 62);
  try {
    corap_cpd(inst.tensor, sketch(2, 11, 2), options(1));
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "config");
  }
  const Tensor3d zero(Dims3{10, 10, 10});
  CHECK_THROWS_AS(corap_cpd(zero, sketch(2, 4, 2), options(1)), StageError);
}

}  // TEST_SUITE
