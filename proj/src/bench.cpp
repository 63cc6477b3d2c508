#include "corap/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "corap/assignment.hpp"
#include "corap/ccpd.hpp"
#include "corap/random.hpp"

namespace corap {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Direct:
      return "direct";
    case Algorithm::Rap:
      return "rap";
    case Algorithm::Corap:
      return "corap";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "direct") return Algorithm::Direct;
  if (name == "rap") return Algorithm::Rap;
  if (name == "corap") return Algorithm::Corap;
  throw ContractViolation("unknown algorithm '" + std::string(name) + "'");
}

Instance generate_instance(const Dims3& dims, Index rank, double snr_db, std::uint64_t seed) {
  require(rank >= 1, "generate_instance: rank must be positive");
  require(!std::isnan(snr_db), "generate_instance: SNR must not be NaN");
  Rng rng(seed);
  Instance inst;
  inst.truth.A = gaussian_matrix(dims[0], rank, rng);
  inst.truth.B = gaussian_matrix(dims[1], rank, rng);
  inst.truth.C = gaussian_matrix(dims[2], rank, rng);
  inst.tensor = cpd_reconstruct(inst.truth);
  if (std::isinf(snr_db) && snr_db > 0) return inst;

  inst.noise_level = inst.signal_level * std::pow(10.0, -snr_db / 10.0);
  const double signal_power =
      inst.tensor.data().squaredNorm() / static_cast<double>(inst.tensor.size());
  inst.noise_scale = std::sqrt(signal_power * inst.noise_level / inst.signal_level);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index n = 0; n < inst.tensor.size(); ++n)
    inst.tensor.data()[n] += inst.noise_scale * normal(rng);
  return inst;
}

namespace {

// cost(r, s) = min_a ||h_r - a * e_s||^2, computed directly (not via the
// expanded quadratic) so that exact rescalings of e leave it bit-identical.
Matrix<double> column_fit_costs(const Matrix<double>& truth, const Matrix<double>& est) {
  const Index R = truth.cols();
  Matrix<double> cost(R, R);
  for (Index s = 0; s < R; ++s) {
    const double e_sq = est.col(s).squaredNorm();
    for (Index r = 0; r < R; ++r) {
      if (e_sq == 0.0) {
        cost(r, s) = truth.col(r).squaredNorm();
        continue;
      }
      const double a = est.col(s).dot(truth.col(r)) / e_sq;
      cost(r, s) = (truth.col(r) - a * est.col(s)).squaredNorm();
    }
  }
  return cost;
}

double assigned_cost(const Matrix<double>& cost, const std::vector<Index>& assignment) {
  double total = 0.0;
  for (Index r = 0; r < cost.rows(); ++r) total += cost(r, assignment[r]);
  return total;
}

}  // namespace

double mean_relative_error(const FactorTripled& truth, const FactorTripled& estimate,
                           bool common_permutation) {
  truth.validate();
  estimate.validate();
  require(truth.dims() == estimate.dims() && truth.rank() == estimate.rank(),
          "mean_relative_error: truth and estimate shapes differ");
  for (int mode = 1; mode <= 3; ++mode)
    if (!estimate.factor(mode).allFinite()) return std::numeric_limits<double>::quiet_NaN();

  std::array<Matrix<double>, 3> costs;
  for (int mode = 1; mode <= 3; ++mode) {
    const double norm_sq = truth.factor(mode).squaredNorm();
    require(norm_sq > 0.0, "mean_relative_error: true factor is zero");
    costs[mode - 1] = column_fit_costs(truth.factor(mode), estimate.factor(mode)) / norm_sq;
  }
  if (common_permutation) {
    const Matrix<double> pooled = costs[0] + costs[1] + costs[2];
    const auto assignment = solve_assignment(pooled);
    return (assigned_cost(costs[0], assignment) + assigned_cost(costs[1], assignment) +
            assigned_cost(costs[2], assignment)) /
           3.0;
  }
  double total = 0.0;
  for (const auto& cost : costs) total += assigned_cost(cost, solve_assignment(cost));
  return total / 3.0;
}

// ---------------------------------------------------------------------------

AlsOptions ExperimentConfig::default_direct_options() {
  AlsOptions opts;
  opts.max_iters = 500;
  opts.rel_tol = 1e-8;
  opts.restarts = 5;
  return opts;
}

AlsOptions ExperimentConfig::default_compressed_options() { return default_direct_options(); }

std::vector<Index> ExperimentConfig::ranks() const {
  return rank_sweep.empty() ? std::vector<Index>{rank} : rank_sweep;
}

Index ExperimentConfig::oversample_for(Index r) const {
  if (oversample_ratio) return static_cast<Index>(std::llround(*oversample_ratio * r));
  return oversample;
}

void ExperimentConfig::validate() const {
  require(dims[0] > 0 && dims[1] > 0 && dims[2] > 0, "dims must be positive");
  require(n_trials >= 1, "trials must be at least 1");
  require(!snr_db.empty(), "at least one SNR value is required");
  require(!algorithms.empty(), "at least one algorithm is required");
  require(max_power >= 1, "max power M must be at least 1");
  require(rap_power >= 0, "RAP power order must be nonnegative");
  require(threads >= 1, "threads must be at least 1");
  const Index min_dim = std::min({dims[0], dims[1], dims[2]});
  for (Index r : ranks()) {
    const Index rp = oversample_for(r);
    require(r >= 1 && r <= rp, "every swept rank must satisfy 1 <= R <= R'");
    require(rp <= min_dim, "R' must not exceed the smallest dimension");
  }
  direct_als.validate();
  compressed_als.validate();
}

std::uint64_t cell_seed(std::uint64_t master, int trial, int snr_index, int rank_index) {
  return derive_seed(master, {static_cast<std::uint64_t>(trial),
                              static_cast<std::uint64_t>(snr_index),
                              static_cast<std::uint64_t>(rank_index)});
}

RunRecord run_algorithm(Algorithm algorithm, const Instance& instance, const ExperimentConfig& cfg,
                        Index rank, std::uint64_t seed) {
  RunRecord rec;
  rec.algorithm = algorithm;
  rec.dims = instance.tensor.dims();
  rec.rank = rank;
  rec.oversample = cfg.oversample_for(rank);
  rec.max_power = cfg.max_power;

  SketchConfig sketch;
  sketch.target_rank = rank;
  sketch.oversampled_rank = rec.oversample;
  sketch.max_power = cfg.max_power;
  sketch.seed = derive_seed(seed, {0x736b65ULL});
  AlsOptions direct = cfg.direct_als;
  direct.seed = derive_seed(seed, {0x616c73ULL});
  AlsOptions compressed = cfg.compressed_als;
  compressed.seed = direct.seed;

  const auto start = std::chrono::steady_clock::now();
  try {
    FactorTripled estimate;
    switch (algorithm) {
      case Algorithm::Direct:
        estimate = als_cpd(instance.tensor, rank, direct).factors;
        break;
      case Algorithm::Rap:
        estimate = rap_cpd(instance.tensor, sketch, cfg.rap_power, compressed).factors;
        break;
      case Algorithm::Corap: {
        auto res = corap_cpd(instance.tensor, sketch, compressed, 1, cfg.m_opt_rule);
        rec.m_opt = res.m_opt;
        estimate = std::move(res.full_factors);
        break;
      }
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.mre = mean_relative_error(instance.truth, estimate, cfg.strict_perm);
    if (std::isnan(rec.mre)) rec.status = "error: non-finite estimate";
  } catch (const std::exception& e) {
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.mre = std::numeric_limits<double>::quiet_NaN();
    rec.m_opt.reset();
    rec.status = std::string("error: ") + e.what();
  }
  return rec;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, std::ostream* progress) {
  cfg.validate();
  const auto ranks = cfg.ranks();
  const int n_snr = static_cast<int>(cfg.snr_db.size());
  const int n_rank = static_cast<int>(ranks.size());
  const int n_cells = cfg.n_trials * n_snr * n_rank;
  const int n_algos = static_cast<int>(cfg.algorithms.size());

  std::ofstream csv;
  if (!cfg.output_path.empty()) {
    bool fresh = true;
    {
      std::ifstream existing(cfg.output_path);
      fresh = !existing || existing.peek() == std::ifstream::traits_type::eof();
    }
    csv.open(cfg.output_path, std::ios::app);
    if (!csv) throw std::runtime_error("cannot open " + cfg.output_path + " for appending");
    if (fresh) csv << csv_header() << '\n' << std::flush;
  }

  std::vector<RunRecord> records(static_cast<std::size_t>(n_cells) * n_algos);
  std::mutex io_mutex;
  std::atomic<int> next{0};

  auto worker = [&] {
    for (int cell = next++; cell < n_cells; cell = next++) {
      const int trial = cell / (n_snr * n_rank);
      const int snr_index = (cell / n_rank) % n_snr;
      const int rank_index = cell % n_rank;
      const Index rank = ranks[rank_index];
      const double snr = cfg.snr_db[snr_index];
      const std::uint64_t seed = cell_seed(cfg.seed, trial, snr_index, rank_index);
      const Instance instance = generate_instance(cfg.dims, rank, snr, seed);
      for (int a = 0; a < n_algos; ++a) {
        RunRecord rec = run_algorithm(cfg.algorithms[a], instance, cfg, rank, seed);
        rec.trial = trial;
        rec.snr_db = snr;
        std::lock_guard lock(io_mutex);
        if (csv.is_open()) csv << format_record(rec) << '\n' << std::flush;
        if (progress)
          *progress << "trial " << trial << " snr " << snr << " R " << rank << ' '
                    << to_string(rec.algorithm) << " mre " << rec.mre << " time "
                    << rec.wall_time << "s " << rec.status << '\n'
                    << std::flush;
        records[static_cast<std::size_t>(cell) * n_algos + a] = std::move(rec);
      }
    }
  };

  const int threads = cfg.timing ? 1 : std::min(cfg.threads, n_cells);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  return records;
}

// ---------------------------------------------------------------------------

namespace {

struct Moments {
  double mean = 0.0;
  double stderr_ = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) {
    m.mean = std::numeric_limits<double>::quiet_NaN();
    m.stderr_ = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    const double n = static_cast<double>(xs.size());
    m.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  }
  return m;
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  require(!records.empty(), "summarize: no records");
  struct Cell {
    SummaryRow row;
    std::vector<double> mre;
    std::vector<double> time;
  };
  std::vector<Cell> cells;
  for (const auto& rec : records) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const Cell& c) {
      return c.row.algorithm == rec.algorithm && c.row.max_power == rec.max_power &&
             c.row.snr_db == rec.snr_db && c.row.rank == rec.rank;
    });
    if (it == cells.end()) {
      Cell c;
      c.row.algorithm = rec.algorithm;
      c.row.max_power = rec.max_power;
      c.row.snr_db = rec.snr_db;
      c.row.rank = rec.rank;
      cells.push_back(std::move(c));
      it = std::prev(cells.end());
    }
    if (std::isnan(rec.mre)) {
      ++it->row.failures;
      continue;
    }
    it->mre.push_back(rec.mre);
    it->time.push_back(rec.wall_time);
  }
  std::vector<SummaryRow> rows;
  for (auto& c : cells) {
    c.row.count = static_cast<int>(c.mre.size());
    const Moments e = moments(c.mre);
    const Moments t = moments(c.time);
    c.row.mean_mre = e.mean;
    c.row.stderr_mre = e.stderr_;
    c.row.mean_time = t.mean;
    c.row.stderr_time = t.stderr_;
    rows.push_back(c.row);
  }
  std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    if (a.snr_db != b.snr_db) return a.snr_db < b.snr_db;
    if (a.max_power != b.max_power) return a.max_power < b.max_power;
    return static_cast<int>(a.algorithm) < static_cast<int>(b.algorithm);
  });
  return rows;
}

}  // namespace corap
