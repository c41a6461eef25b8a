#pragma once

// Synthetic experiments: truth, sampling law and data generation; single,
// replicated and swept runs; empirical checks of the concentration
// statements and rate scalings.

#include <map>
#include <string>
#include <vector>

#include "onebit/bounds.hpp"
#include "onebit/config.hpp"
#include "onebit/metrics.hpp"
#include "onebit/posterior.hpp"

namespace onebit {

struct GeneratedTruth {
  TruthSpec spec;
  Matrix mstar;
  double kappa = 0.0;  // ||M*||_inf
};

/// Ubar, Vbar i.i.d. U[-B, B] in the first r columns (K = max(r, 1) columns).
GeneratedTruth generate_truth(int d1, int d2, int r, double B, Rng& rng);

SamplingDistribution generate_pi(int d1, int d2, const PiSpec& spec, Rng& rng);

/// n i.i.d. draws of omega ~ Pi, each followed by its label Y ~ f(M*_omega).
ObservationSet sample_observations(const Matrix& mstar, const SamplingDistribution& pi, long n,
                                   Rng& rng);

struct RunResult {
  std::string config_digest;
  std::uint64_t seed = 0;
  long n = 0;
  int d1 = 0;
  int d2 = 0;
  int r = 0;
  double alpha = 0.0;
  std::string prior;

  double epsilon_n = 0.0;
  double frob_sq_mean_est = 0.0;  // ||M_hat - M*||_F^2 / (d1 d2)
  FunctionalEstimate post_avg_frob_sq;
  FunctionalEstimate post_avg_hellinger;  // H^2(P_M, P_M*) / (d1 d2)
  FunctionalEstimate post_avg_renyi;      // D_alpha(P_M, P_M*) / (d1 d2)
  std::map<BoundSide, double> thresholds;
  double prob_floor = 0.0;
  double accept_rate = 0.0;

  ConstantsReport constants;
  double kappa_checked = 0.0;       // realized sup-norm used for the pointwise transfer
  int transfer_samples_checked = 0;
  int transfer_violations = 0;      // Frobenius <= Hellinger / (C1 C_kappa) failures
  int sandwich_violations = 0;      // H^2 <= D_alpha failures (alpha >= 1/2 only)
  bool jensen_ok = false;           // frob_sq_mean_est <= post avg + 3 MCSE
  ChainDiagnostics diagnostics;
};

/// Everything needed to reproduce one run's inputs.
struct RunInputs {
  GeneratedTruth truth;
  SamplingDistribution pi = SamplingDistribution::uniform(1, 1);
  ObservationSet data;
};

/// Truth, Pi and data for replication seed `seed`.
RunInputs generate_inputs(const ExperimentConfig& cfg, std::uint64_t seed);

/// Runs the configured chain on given inputs.
Chain run_chain(const ExperimentConfig& cfg, const EntryCounts& counts, std::uint64_t seed);

/// Evaluates one finished chain against the truth.
RunResult evaluate_run(const ExperimentConfig& cfg, const RunInputs& inputs, const Chain& chain,
                       std::uint64_t seed);

/// generate_inputs + run_chain + evaluate_run under replication seed `seed`.
RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed);

struct ReplicatedResult {
  std::vector<RunResult> runs;
  std::vector<BoundCheckResult> checks;  // renyi, hellinger, frobenius
};

/// Bound checks over a set of finished runs.
std::vector<BoundCheckResult> check_runs(const std::vector<RunResult>& runs, double alpha);

/// Replications use seeds split_seed(master_seed, k), run on cfg.workers threads.
ReplicatedResult run_replicated(const ExperimentConfig& cfg);

struct SlopeEstimate {
  double slope = 0.0;
  double stderr_ = 0.0;
  double intercept = 0.0;
  int points = 0;
};

/// Least-squares fit of log(y) on log(x).
SlopeEstimate fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);

struct GridPoint {
  std::string axis;  // "n" or "r"
  long n = 0;
  int r = 0;
  double median_post_avg_frob_sq = 0.0;
  double median_frob_sq_mean_est = 0.0;
  double median_post_avg_hellinger = 0.0;
  double median_post_avg_renyi = 0.0;
  double epsilon_n = 0.0;
  std::vector<BoundCheckResult> checks;
};

struct SweepReport {
  std::vector<RunResult> rows;
  std::vector<GridPoint> points;
  std::map<std::string, SlopeEstimate> slope_estimates;
  int monotone_inversions = 0;  // increases of the median error along the n grid
};

/// Aggregates finished runs into grid points, slopes and the monotonicity
/// count. n-axis points group rows with r == base_r by n; r-axis points group
/// rows with n == r_fixed_n by r (emitted only when more than one r occurs).
SweepReport summarize_sweep(std::vector<RunResult> rows, int base_r, long r_fixed_n);

/// n sweep at r = base.r over n_grid, then an r sweep at n = base.r_fixed_n
/// (skipped when r_grid is empty).
SweepReport run_sweep(const ExperimentConfig& base);

}  // namespace onebit
