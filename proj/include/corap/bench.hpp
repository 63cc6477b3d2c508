#pragma once

// Synthetic instances, the permutation/scale-invariant factor error, and the
// Monte Carlo runner comparing direct ALS, RAP-CPD and CoRAP-CPD.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corap/ccpd.hpp"
#include "corap/cpd.hpp"
#include "corap/tensor.hpp"

namespace corap {

enum class Algorithm { Direct, Rap, Corap };

std::string_view to_string(Algorithm a);
/// Accepts "direct", "rap", "corap"; throws ContractViolation otherwise.
Algorithm parse_algorithm(std::string_view name);

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

struct Instance {
  Tensor3d tensor;
  FactorTripled truth;
  double signal_level = 1.0;  ///< P_s
  double noise_level = 0.0;   ///< P_n, with 10 log10(P_s / P_n) = snr_db
  /// Multiplier applied to the unit-variance noise tensor.
  double noise_scale = 0.0;
};

/// T = S + sigma N with S = [[A, B, C]], A, B, C and N i.i.d. standard
/// Gaussian, and sigma chosen so the signal-to-noise power ratio equals
/// P_s / P_n. snr_db = +inf yields T = S exactly.
Instance generate_instance(const Dims3& dims, Index rank, double snr_db, std::uint64_t seed);

/// Mean relative factor error. Each factor's estimate is column-permuted and
/// column-scaled to best fit the truth in the least-squares sense (optimal
/// assignment over per-column fits); with `common_permutation` one
/// permutation is shared by A, B and C. NaN if the estimate is not finite.
double mean_relative_error(const FactorTripled& truth, const FactorTripled& estimate,
                           bool common_permutation = false);

struct ExperimentConfig {
  Dims3 dims{50, 50, 50};
  Index rank = 5;
  Index oversample = 10;  ///< R'
  /// When set, R' = round(ratio * R) for every rank in the sweep.
  std::optional<double> oversample_ratio;
  int max_power = 2;  ///< M
  int rap_power = 1;  ///< power order of the RAP baseline triad
  std::vector<double> snr_db{kNoiseless};
  /// Ranks to sweep; empty means {rank}.
  std::vector<Index> rank_sweep;
  std::vector<Algorithm> algorithms{Algorithm::Direct, Algorithm::Rap, Algorithm::Corap};
  int n_trials = 1;
  std::uint64_t seed = 0;
  std::string output_path;  ///< CSV destination; empty disables the file
  int threads = 1;
  bool timing = false;  ///< forces serial execution
  bool strict_perm = false;
  MOptRule m_opt_rule = MOptRule::CoreResidual;
  AlsOptions direct_als = default_direct_options();
  AlsOptions compressed_als = default_compressed_options();

  static AlsOptions default_direct_options();
  static AlsOptions default_compressed_options();

  std::vector<Index> ranks() const;
  Index oversample_for(Index rank) const;
  void validate() const;
};

struct RunRecord {
  int trial = 0;
  Algorithm algorithm = Algorithm::Direct;
  Dims3 dims{0, 0, 0};
  Index rank = 0;
  Index oversample = 0;
  int max_power = 0;
  double snr_db = 0.0;
  double mre = 0.0;
  double wall_time = 0.0;  ///< seconds
  std::optional<int> m_opt;
  std::string status = "ok";

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Seed of the instance shared by every algorithm in one cell.
std::uint64_t cell_seed(std::uint64_t master, int trial, int snr_index, int rank_index);

/// Runs one algorithm on one instance and fills mre, wall_time and m_opt.
/// Failures are recorded (mre = NaN, status "error: ...") instead of thrown.
RunRecord run_algorithm(Algorithm algorithm, const Instance& instance, const ExperimentConfig& cfg,
                        Index rank, std::uint64_t seed);

/// The full sweep: trial x SNR x rank cells, every algorithm on the same
/// instance per cell. Records are appended to cfg.output_path as they finish
/// and returned in (trial, snr, rank, algorithm) order.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

// ---------------------------------------------------------------------------
// CSV persistence

std::string_view csv_header();
std::string format_record(const RunRecord& r);
RunRecord parse_record(std::string_view line);
void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records_csv(std::istream& in);
std::vector<RunRecord> read_records_csv(const std::string& path);

// ---------------------------------------------------------------------------
// Aggregation

struct SummaryRow {
  Algorithm algorithm = Algorithm::Direct;
  int max_power = 0;
  double snr_db = 0.0;
  Index rank = 0;
  int count = 0;     ///< records with a finite error
  int failures = 0;  ///< records with NaN error
  double mean_mre = 0.0;
  double stderr_mre = 0.0;
  double mean_time = 0.0;
  double stderr_time = 0.0;
};

/// One row per (algorithm, M, SNR, rank) cell, ordered by rank, SNR, M,
/// algorithm. NaN errors are excluded from the means and counted as failures.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
std::string format_summary_table(const std::vector<SummaryRow>& rows);

}  // namespace corap
