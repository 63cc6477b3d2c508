// corap: generate synthetic CRT3 tensors, decompose them, and run the
// direct / RAP / CoRAP Monte Carlo comparison.

#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "corap/bench.hpp"
#include "corap/ccpd.hpp"
#include "corap/cpd.hpp"
#include "corap/tensor_io.hpp"

namespace {

using corap::Index;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t\"[");
    const auto e = item.find_last_not_of(" \t\"]");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<Index> parse_index_list(const std::string& text) {
  std::vector<Index> out;
  for (const auto& s : split_list(text)) out.push_back(std::stoll(s));
  return out;
}

corap::Dims3 parse_dims(const std::string& text) {
  const auto v = parse_index_list(text);
  if (v.size() != 3) throw corap::ContractViolation("--dims expects I,J,K");
  return {v[0], v[1], v[2]};
}

std::vector<double> parse_snr_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) {
    if (s == "inf" || s == "+inf" || s == "none") {
      out.push_back(corap::kNoiseless);
    } else {
      out.push_back(std::stod(s));
    }
  }
  return out;
}

std::vector<corap::Algorithm> parse_algos(const std::string& text) {
  std::vector<corap::Algorithm> out;
  for (const auto& s : split_list(text)) out.push_back(corap::parse_algorithm(s));
  return out;
}

// Options shared by every subcommand.
struct CommonArgs {
  std::string dims = "50,50,50";
  Index rank = 5;
  Index oversample = 10;
  double oversample_ratio = 0.0;
  int max_power = 2;
  int rap_power = 1;
  std::string snr = "inf";
  std::string algos = "direct,rap,corap";
  int trials = 1;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 1;
  std::string rank_sweep;
  bool strict_perm = false;
  bool timing = false;
  int restarts = 5;
  int max_iters = 500;
  double rel_tol = 1e-8;
  std::string m_opt_rule = "core";

  void attach(CLI::App* app) {
    app->add_option("--dims", dims, "tensor dimensions I,J,K");
    app->add_option("--rank", rank, "CPD rank R");
    app->add_option("--oversample", oversample, "projector width R'");
    app->add_option("--oversample-ratio", oversample_ratio, "use R' = ratio * R when > 0");
    app->add_option("--max-power", max_power, "number of coupled triads M");
    app->add_option("--rap-power", rap_power, "power order of the RAP baseline");
    app->add_option("--snr", snr, "SNR list in dB, or inf");
    app->add_option("--algos", algos, "subset of direct,rap,corap");
    app->add_option("--trials", trials, "Monte Carlo trials");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--out", out, "output path");
    app->add_option("--threads", threads, "worker threads for independent trials");
    app->add_option("--rank-sweep", rank_sweep, "list of ranks to sweep");
    app->add_flag("--strict-perm", strict_perm, "share one column permutation across A, B, C");
    app->add_flag("--timing", timing, "serial timing mode");
    app->add_option("--restarts", restarts, "random ALS restarts");
    app->add_option("--max-iters", max_iters, "ALS sweep limit");
    app->add_option("--rel-tol", rel_tol, "ALS relative residual change tolerance");
    app->add_option("--m-opt-rule", m_opt_rule, "CoRAP triad selection: core or full")
        ->check(CLI::IsMember({"core", "full"}));
    app->add_option("--config", config, "flat key = value file mirroring the flags")
        ->check(CLI::ExistingFile);
  }

  std::string config;

  corap::AlsOptions als() const {
    corap::AlsOptions o;
    o.restarts = restarts;
    o.max_iters = max_iters;
    o.rel_tol = rel_tol;
    o.seed = seed;
    return o;
  }

  corap::MOptRule rule() const {
    return m_opt_rule == "full" ? corap::MOptRule::FullTensorFit : corap::MOptRule::CoreResidual;
  }

  corap::SketchConfig sketch(Index r) const {
    corap::SketchConfig cfg;
    cfg.target_rank = r;
    cfg.oversampled_rank =
        oversample_ratio > 0 ? static_cast<Index>(std::llround(oversample_ratio * r)) : oversample;
    cfg.max_power = max_power;
    cfg.seed = seed;
    return cfg;
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Fills options that were not given on the command line from a flat
// `key = value` file; '#' starts a comment.
void apply_config(CLI::App* app, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    for (auto& c : key)
      if (c == '_') c = '-';
    CLI::Option* opt = app->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config")
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

void write_factors(const std::string& prefix, const corap::FactorTripled& f) {
  corap::write_matrix_csv(prefix + ".A.csv", f.A);
  corap::write_matrix_csv(prefix + ".B.csv", f.B);
  corap::write_matrix_csv(prefix + ".C.csv", f.C);
}

int run_gen(const CommonArgs& args) {
  if (args.out.empty()) throw corap::ContractViolation("gen needs --out");
  const auto snrs = parse_snr_list(args.snr);
  if (snrs.size() != 1) throw corap::ContractViolation("gen takes a single --snr value");
  const auto inst = corap::generate_instance(parse_dims(args.dims), args.rank, snrs[0], args.seed);
  corap::write_tensor(args.out, inst.tensor);
  write_factors(args.out + ".truth", inst.truth);
  std::cout << "wrote " << corap::dims_string(inst.tensor.dims()) << " tensor to " << args.out
            << " (truth factors in " << args.out << ".truth.{A,B,C}.csv)\n";
  return 0;
}

int run_decompose(const CommonArgs& args, const std::string& input, const std::string& truth) {
  if (input.empty()) throw corap::ContractViolation("decompose needs --in");
  const corap::Tensor3d t = corap::read_tensor(input);
  const auto algos = parse_algos(args.algos);
  if (algos.size() != 1)
    throw corap::ContractViolation("decompose takes exactly one algorithm in --algos");
  corap::FactorTripled est;
  switch (algos.front()) {
    case corap::Algorithm::Direct:
      est = corap::als_cpd(t, args.rank, args.als()).factors;
      break;
    case corap::Algorithm::Rap:
      est = corap::rap_cpd(t, args.sketch(args.rank), args.rap_power, args.als()).factors;
      break;
    case corap::Algorithm::Corap: {
      const auto res = corap::corap_cpd(t, args.sketch(args.rank), args.als(), 1, args.rule());
      std::cout << "m_opt " << res.m_opt << "\n";
      est = res.full_factors;
      break;
    }
  }
  std::cout << "relative residual " << corap::relative_residual(t, est) << "\n";
  if (!truth.empty()) {
    corap::FactorTripled f{corap::read_matrix_csv(truth + ".A.csv"),
                           corap::read_matrix_csv(truth + ".B.csv"),
                           corap::read_matrix_csv(truth + ".C.csv")};
    std::cout << "mean relative error " << corap::mean_relative_error(f, est, args.strict_perm)
              << "\n";
  }
  const std::string prefix = args.out.empty() ? input : args.out;
  write_factors(prefix, est);
  std::cout << "factors written to " << prefix << ".{A,B,C}.csv\n";
  return 0;
}

int run_bench(const CommonArgs& args, bool quiet) {
  corap::ExperimentConfig cfg;
  cfg.dims = parse_dims(args.dims);
  cfg.rank = args.rank;
  cfg.oversample = args.oversample;
  if (args.oversample_ratio > 0) cfg.oversample_ratio = args.oversample_ratio;
  cfg.max_power = args.max_power;
  cfg.rap_power = args.rap_power;
  cfg.snr_db = parse_snr_list(args.snr);
  if (!args.rank_sweep.empty()) cfg.rank_sweep = parse_index_list(args.rank_sweep);
  cfg.algorithms = parse_algos(args.algos);
  cfg.n_trials = args.trials;
  cfg.seed = args.seed;
  cfg.output_path = args.out;
  cfg.threads = args.threads;
  cfg.timing = args.timing;
  cfg.strict_perm = args.strict_perm;
  cfg.m_opt_rule = args.rule();
  cfg.direct_als = args.als();
  cfg.compressed_als = args.als();

  const auto records = corap::run_experiment(cfg, quiet ? nullptr : &std::cerr);
  const auto rows = corap::summarize(records);
  std::cout << corap::format_summary_table(rows);
  if (!args.out.empty()) {
    std::ofstream summary(args.out + ".summary.csv");
    corap::write_summary_csv(summary, rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupled random projection CPD: generate, decompose, benchmark"};
  app.require_subcommand(1);

  CommonArgs gen_args, dec_args, bench_args;
  auto* gen = app.add_subcommand("gen", "write a synthetic instance as a CRT3 tensor");
  gen_args.attach(gen);

  auto* dec = app.add_subcommand("decompose", "decompose a CRT3 tensor into factor files");
  dec_args.attach(dec);
  dec_args.algos = "corap";
  std::string input, truth;
  dec->add_option("--in", input, "CRT3 tensor file")->check(CLI::ExistingFile);
  dec->add_option("--truth", truth, "prefix of true factor files for error reporting");

  auto* bench = app.add_subcommand("bench", "Monte Carlo comparison sweep");
  bench_args.attach(bench);
  bool quiet = false;
  bench->add_flag("--quiet", quiet, "suppress per-run progress");

  CLI11_PARSE(app, argc, argv);

  std::string stage = "config";
  try {
    for (auto [sub, args] : {std::pair{gen, &gen_args}, std::pair{dec, &dec_args},
                              std::pair{bench, &bench_args}})
      if (sub->parsed() && !args->config.empty()) apply_config(sub, args->config);
    if (gen->parsed()) {
      stage = "gen";
      return run_gen(gen_args);
    }
    if (dec->parsed()) {
      stage = "decompose";
      return run_decompose(dec_args, input, truth);
    }
    stage = "bench";
    return run_bench(bench_args, quiet);
  } catch (const std::exception& e) {
    std::cerr << "corap " << stage << " failed: " << e.what() << "\n";
    return 1;
  }
}
