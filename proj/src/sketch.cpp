#include "corap/sketch.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "corap/linalg.hpp"
#include "corap/random.hpp"

namespace corap {

namespace {

// Mode unfolding as a linear operator. Modes 1 and 3 are zero-copy views of
// the tensor data; mode 2 is materialized once.
class UnfoldingOperator {
 public:
  using Scalar = double;

  UnfoldingOperator(const Tensor3d& t, int mode) : mode_(mode) {
    const auto& d = t.dims();
    if (mode == 2) {
      owned_ = matricize(t, 2);
      data_ = owned_.data();
      stored_rows_ = owned_.rows();
      stored_cols_ = owned_.cols();
    } else if (mode == 1) {
      // Row-major I x JK is column-major JK x I; stored transposed.
      data_ = t.data().data();
      stored_rows_ = d[1] * d[2];
      stored_cols_ = d[0];
    } else {
      data_ = t.data().data();
      stored_rows_ = d[2];
      stored_cols_ = d[0] * d[1];
    }
  }

  Index rows() const { return transposed() ? stored_cols_ : stored_rows_; }
  Index cols() const { return transposed() ? stored_rows_ : stored_cols_; }

  Matrix<double> apply(const Matrix<double>& x) const {
    if (transposed()) return stored().transpose() * x;
    return stored() * x;
  }
  Matrix<double> apply_adjoint(const Matrix<double>& y) const {
    if (transposed()) return stored() * y;
    return stored().transpose() * y;
  }

 private:
  bool transposed() const { return mode_ == 1; }
  Eigen::Map<const Matrix<double>> stored() const {
    return Eigen::Map<const Matrix<double>>(data_, stored_rows_, stored_cols_);
  }

  int mode_;
  Matrix<double> owned_;
  const double* data_ = nullptr;
  Index stored_rows_ = 0;
  Index stored_cols_ = 0;
};

Matrix<double> projector_from(const UnfoldingOperator& op, int mode, int power,
                              const SketchConfig& cfg) {
  const auto omega =
      gaussian_matrix(op.cols(), cfg.oversampled_rank,
                      derive_seed(cfg.seed, {static_cast<std::uint64_t>(mode),
                                             static_cast<std::uint64_t>(power)}));
  return truncated_svd(power_sketch(op, omega, power), cfg.oversampled_rank).U;
}

double relative_difference(const Tensor3d& a, const Tensor3d& b) {
  const double scale = std::max(frobenius_norm(a), frobenius_norm(b));
  if (scale == 0.0) return 0.0;
  return (a.data() - b.data()).norm() / scale;
}

}  // namespace

void SketchConfig::validate(const Dims3& dims) const {
  require(target_rank >= 1, "target rank must be positive");
  require(oversampled_rank > target_rank, "oversampled rank R' must exceed the target rank R");
  require(oversampled_rank <= std::min({dims[0], dims[1], dims[2]}),
          "oversampled rank R' exceeds a tensor dimension (" + dims_string(dims) + ")");
  require(max_power >= 1, "max power M must be at least 1");
  require(third_mode_power >= 0, "third-mode power order must be nonnegative");
}

Matrix<double> mode_projector(const Tensor3d& t, int mode, int power, const SketchConfig& cfg) {
  require(mode >= 1 && mode <= 3, "mode_projector: mode must be 1, 2 or 3");
  require(power >= 0, "mode_projector: power order must be nonnegative");
  require(cfg.oversampled_rank >= 1 && cfg.oversampled_rank <= t.dim(mode),
          "mode_projector: R' exceeds the mode size");
  return projector_from(UnfoldingOperator(t, mode), mode, power, cfg);
}

ProjectionTriad build_rap_projectors(const Tensor3d& t, const SketchConfig& cfg, int m) {
  require(m >= 0, "build_rap_projectors: power order must be nonnegative");
  require(cfg.oversampled_rank >= 1 &&
              cfg.oversampled_rank <= std::min({t.dim(1), t.dim(2), t.dim(3)}),
          "build_rap_projectors: R' exceeds a tensor dimension");
  ProjectionTriad triad;
  triad.U = mode_projector(t, 1, m, cfg);
  triad.V = mode_projector(t, 2, m, cfg);
  triad.W = std::make_shared<const Matrix<double>>(mode_projector(t, 3, m, cfg));
  triad.power_order = m;
  return triad;
}

std::vector<ProjectionTriad> build_corap_triads(const Tensor3d& t, const SketchConfig& cfg) {
  cfg.validate(t.dims());
  auto W = std::make_shared<const Matrix<double>>(
      mode_projector(t, 3, cfg.third_mode_power, cfg));
  const UnfoldingOperator mode1(t, 1);
  const UnfoldingOperator mode2(t, 2);
  std::vector<ProjectionTriad> triads;
  triads.reserve(cfg.max_power);
  for (int m = 1; m <= cfg.max_power; ++m) {
    ProjectionTriad triad;
    triad.U = projector_from(mode1, 1, m, cfg);
    triad.V = projector_from(mode2, 2, m, cfg);
    triad.W = W;
    triad.power_order = m;
    triads.push_back(std::move(triad));
  }
  return triads;
}

Tensor3d compress(const Tensor3d& t, const ProjectionTriad& triad) {
  require(triad.W != nullptr, "compress: triad has no third-mode projector");
  require(triad.U.rows() == t.dim(1) && triad.V.rows() == t.dim(2) && triad.W->rows() == t.dim(3),
          "compress: projector rows must match tensor dimensions");
  // Shrink the largest modes first.
  return mode_n_product(
      mode_n_product(mode_n_product(t, triad.U.transpose(), 1), triad.V.transpose(), 2),
      triad.W->transpose(), 3);
}

Tensor3d expand(const Tensor3d& core, const ProjectionTriad& triad) {
  require(triad.W != nullptr, "expand: triad has no third-mode projector");
  return mode_n_product(mode_n_product(mode_n_product(core, triad.U, 1), triad.V, 2), *triad.W, 3);
}

CompressedEnsemble build_ensemble(const Tensor3d& t, const SketchConfig& cfg) {
  CompressedEnsemble ensemble;
  ensemble.triads = build_corap_triads(t, cfg);
  ensemble.W = ensemble.triads.front().W;
  ensemble.cores.reserve(ensemble.triads.size());
  for (const auto& triad : ensemble.triads) ensemble.cores.push_back(compress(t, triad));
  if (cfg.verify) verify_ensemble(t, ensemble);
  return ensemble;
}

void verify_ensemble(const Tensor3d& t, const CompressedEnsemble& ensemble, double tol) {
  if (ensemble.cores.size() != ensemble.triads.size() || ensemble.cores.empty())
    throw std::runtime_error("ensemble: core and triad counts differ");
  for (std::size_t m = 0; m < ensemble.triads.size(); ++m) {
    const auto& triad = ensemble.triads[m];
    if (triad.W.get() != ensemble.W.get())
      throw std::runtime_error("ensemble: triad " + std::to_string(m + 1) +
                               " does not share the third-mode projector");
    const Tensor3d reference = mode_n_product(
        mode_n_product(mode_n_product(t, triad.W->transpose(), 3), triad.V.transpose(), 2),
        triad.U.transpose(), 1);
    const double diff = relative_difference(reference, ensemble.cores[m]);
    if (!(diff <= tol))
      throw std::runtime_error("ensemble: core " + std::to_string(m + 1) +
                               " deviates from its projection by " + std::to_string(diff));
  }
}

}  // namespace corap
