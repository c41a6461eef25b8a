// Experiment driver: simulate, fit, evaluate, sweep, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "onebit/data_io.hpp"
#include "onebit/harness.hpp"
#include "onebit/report.hpp"

namespace fs = std::filesystem;
using namespace onebit;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<int> workers;
};

void add_common(CLI::App* sub, Common& c, bool need_config) {
  auto* opt = sub->add_option("--config", c.config, "experiment config file");
  if (need_config) opt->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "seed (replication seed, or master seed for sweeps)");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.workers) cfg.workers = *c.workers;
  return cfg;
}

fs::path out_dir(const Common& c) {
  fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text).flush()) throw std::runtime_error("cannot write " + path.string());
}

int cmd_simulate(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const std::uint64_t seed = c.seed ? *c.seed : split_seed(cfg.master_seed, 0);
  const RunInputs in = generate_inputs(cfg, seed);
  const fs::path dir = out_dir(c);
  write_matrix_csv(in.truth.mstar, dir / "truth.csv");
  write_matrix_csv(in.pi.probs(), dir / "pi.csv");
  write_observations_csv(in.data, dir / "data.csv");
  nlohmann::json meta = {{"seed", seed},
                         {"kappa", in.truth.kappa},
                         {"rank", numerical_rank(in.truth.mstar)},
                         {"C1", in.pi.c1()},
                         {"n", in.data.size()}};
  write_text(dir / "truth.json", meta.dump(2) + "\n");
  std::cout << "wrote truth.csv, pi.csv, data.csv to " << dir.string() << "\n";
  return 0;
}

int cmd_fit(const Common& c, const std::string& data_path) {
  const ExperimentConfig cfg = load(c);
  const std::uint64_t seed = c.seed ? *c.seed : split_seed(cfg.master_seed, 0);
  const ObservationSet data = read_observations_csv(data_path, cfg.d1, cfg.d2);
  ExperimentConfig fitted = cfg;
  fitted.n = long(data.size());  // auto tau and b follow the data size
  const Chain chain = run_chain(fitted, tally(data, cfg.d1, cfg.d2), seed);
  const fs::path dir = out_dir(c);
  write_chain_csv(chain, dir / "chain.csv");
  write_chain_diagnostics_json(chain, dir / "chain_diagnostics.json");
  write_matrix_csv(posterior_mean(chain).mean_matrix, dir / "mhat.csv");
  std::printf("samples %zu  accept %.3f\n", chain.samples.size(), chain.accept_rate);
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& est, const std::string& truth,
                 const std::string& pi_path) {
  const ExperimentConfig cfg = load(c);
  const Matrix a = read_matrix_csv(est);
  const Matrix b = read_matrix_csv(truth);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::runtime_error("estimate and truth shapes differ");
  }
  const SamplingDistribution pi = pi_path.empty()
                                      ? SamplingDistribution::uniform(int(a.rows()), int(a.cols()))
                                      : read_pi_csv(pi_path);
  const double kappa = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  nlohmann::json j = {
      {"frob_sq_normalized", frobenius_sq_normalized(a, b)},
      {"sup_error", sup_error(a, b)},
      {"kl", joint_divergence(a, b, pi, DivergenceKind::kl())},
      {"hellinger_sq", joint_divergence(a, b, pi, DivergenceKind::hellinger())},
      {"renyi", joint_divergence(a, b, pi, DivergenceKind::renyi(cfg.alpha))},
      {"alpha", cfg.alpha},
      {"kappa", kappa},
      {"C1", pi.c1()},
      {"C_kappa", C_kappa(kappa)}};
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (c.out != ".") write_text(out_dir(c) / "metrics.json", text);
  return 0;
}

int cmd_sweep(const Common& c) {
  ExperimentConfig cfg = load(c);
  if (c.seed) cfg.master_seed = *c.seed;
  const SweepReport rep = run_sweep(cfg);
  const fs::path dir = out_dir(c);
  emit_report(rep, dir);
  for (const auto& [name, s] : rep.slope_estimates) {
    std::printf("%-26s slope %+.3f (se %.3f)\n", name.c_str(), s.slope, s.stderr_);
  }
  std::cout << "wrote " << (dir / "runs.csv").string() << " and summary.json\n";
  return 0;
}

int cmd_report(const Common& c, const std::vector<std::string>& inputs) {
  const ExperimentConfig cfg = load(c);
  std::vector<RunResult> rows;
  for (const auto& in : inputs) {
    fs::path p(in);
    if (fs::is_directory(p)) p /= "runs.csv";
    auto more = read_runs_csv(p);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  const SweepReport rep = summarize_sweep(std::move(rows), cfg.r, cfg.r_fixed_n);
  emit_report(rep, out_dir(c));
  std::cout << summary_json(rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"1-bit matrix completion with fractional posteriors"};
  app.require_subcommand(1);

  Common sim, fit, eval, sweep, report;
  std::string data_path, est, truth, pi_path;
  std::vector<std::string> inputs;

  auto* s_sim = app.add_subcommand("simulate", "write truth, Pi and data files");
  add_common(s_sim, sim, false);
  auto* s_fit = app.add_subcommand("fit", "run one chain on an observation file");
  add_common(s_fit, fit, false);
  s_fit->add_option("--data", data_path, "observation CSV (i,j,y; 1-based)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* s_eval = app.add_subcommand("evaluate", "metrics between two matrices under Pi");
  add_common(s_eval, eval, false);
  s_eval->add_option("--estimate", est, "matrix CSV")->required()->check(CLI::ExistingFile);
  s_eval->add_option("--truth", truth, "matrix CSV")->required()->check(CLI::ExistingFile);
  s_eval->add_option("--pi", pi_path, "sampling distribution CSV (default uniform)")
      ->check(CLI::ExistingFile);
  auto* s_sweep = app.add_subcommand("sweep", "n grid and r grid with replications");
  add_common(s_sweep, sweep, true);
  auto* s_report = app.add_subcommand("report", "aggregate runs.csv files from earlier sweeps");
  add_common(s_report, report, false);
  s_report->add_option("inputs", inputs, "run directories or runs.csv files")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*s_sim) return cmd_simulate(sim);
    if (*s_fit) return cmd_fit(fit, data_path);
    if (*s_eval) return cmd_evaluate(eval, est, truth, pi_path);
    if (*s_sweep) return cmd_sweep(sweep);
    if (*s_report) return cmd_report(report, inputs);
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
