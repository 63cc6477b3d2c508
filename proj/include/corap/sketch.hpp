#pragma once

// Random projection (RAP) and coupled random projection (CoRAP) compression.
//
// A triad {U, V, W} of orthonormal projectors maps an I x J x K tensor to an
// R' x R' x R' core. CoRAP builds M triads whose first- and second-mode
// projectors come from sketches of power order m = 1..M, while every triad
// shares one third-mode projector W. The cores then share the third-mode
// factor W^T C.

#include <cstdint>
#include <memory>
#include <vector>

#include "corap/tensor.hpp"

namespace corap {

struct SketchConfig {
  Index target_rank = 1;       ///< R
  Index oversampled_rank = 2;  ///< R', columns per projector
  int max_power = 1;           ///< M, number of coupled triads
  std::uint64_t seed = 0;
  int third_mode_power = 1;  ///< power order of the shared W sketch
  bool verify = false;       ///< re-check ensemble invariants after building

  /// Throws ContractViolation unless R < R' <= min(dims) and M >= 1.
  void validate(const Dims3& dims) const;
};

struct ProjectionTriad {
  Matrix<double> U;
  Matrix<double> V;
  std::shared_ptr<const Matrix<double>> W;
  int power_order = 0;
};

struct CompressedEnsemble {
  std::vector<Tensor3d> cores;
  std::vector<ProjectionTriad> triads;
  std::shared_ptr<const Matrix<double>> W;

  int size() const noexcept { return static_cast<int>(cores.size()); }
};

/// Orthonormal R'-column projector for one mode: top left singular vectors of
/// the order-`power` sketch of the mode unfolding, drawn with a Gaussian test
/// matrix seeded by (cfg.seed, mode, power).
Matrix<double> mode_projector(const Tensor3d& t, int mode, int power, const SketchConfig& cfg);

/// Single-triad RAP projectors, every mode at power order m.
ProjectionTriad build_rap_projectors(const Tensor3d& t, const SketchConfig& cfg, int m);

/// CoRAP triads m = 1..M sharing one W.
std::vector<ProjectionTriad> build_corap_triads(const Tensor3d& t, const SketchConfig& cfg);

/// t x1 U^T x2 V^T x3 W^T.
Tensor3d compress(const Tensor3d& t, const ProjectionTriad& triad);

/// core x1 U x2 V x3 W, the inverse direction of compress.
Tensor3d expand(const Tensor3d& core, const ProjectionTriad& triad);

CompressedEnsemble build_ensemble(const Tensor3d& t, const SketchConfig& cfg);

/// Throws std::runtime_error when a stored core differs from a fresh
/// projection (computed in the opposite mode order) by more than `tol`
/// relative, or when a triad's W is not the shared one.
void verify_ensemble(const Tensor3d& t, const CompressedEnsemble& ensemble, double tol = 1e-10);

}  // namespace corap
