#pragma once

// Chain drivers targeting the fractional posterior L_n^alpha(M) pi(M) for
// the Student prior (on the full matrix) and the factorization prior
// (Metropolis-within-Gibbs over L, R and the column variances).

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "onebit/mala.hpp"
#include "onebit/priors.hpp"

namespace onebit {

struct MalaConfig {
  double step_size = 0.01;
  int n_steps = 10000;
  int burn_in = 2000;
  int thin = 5;
  bool adapt = true;       // dual averaging toward 0.574 during burn-in only
  bool unadjusted = false;  // ULA: skips the Metropolis correction

  void validate() const;
};

/// How the Student-prior chain moves.
enum class StudentKernel {
  /// MALA directly on M against L_n^alpha(M) pi_st(M).
  FullMala,
  /// Gaussian scale-mixture form of pi_st: an exact Wishart draw of the row
  /// precision S given M, then preconditioned MALA on M given S. The
  /// M-marginal of the augmented target is the fractional posterior.
  ScaleMixture,
};

struct BlockDiagnostics {
  std::string name;
  double accept_rate = 0.0;  // over post-burn-in steps
  double final_step = 0.0;
  std::vector<double> step_trajectory;  // every `thin` steps during burn-in
  long nonfinite_proposals = 0;
};

struct ChainDiagnostics {
  std::vector<BlockDiagnostics> blocks;
  int steps_run = 0;
};

struct Chain {
  int d1 = 0;
  int d2 = 0;
  std::vector<Matrix> samples;              // induced matrices, post-burn-in and thinned
  std::vector<FactorState> factor_samples;  // populated for factor chains only
  double accept_rate = 0.0;                 // mean over blocks
  std::uint64_t seed = 0;
  std::string target_descriptor;
  ChainDiagnostics diagnostics;
};

/// Thrown when a chain state becomes non-finite.
class ChainDiverged : public std::runtime_error {
 public:
  ChainDiverged(const std::string& what, ChainDiagnostics diag)
      : std::runtime_error(what), diagnostics(std::move(diag)) {}
  ChainDiagnostics diagnostics;
};

/// Short digest of the observation counts, used in target descriptors.
std::string data_digest(const EntryCounts& counts);

Chain run_student_chain(const EntryCounts& data, FractionalExponent alpha,
                        const StudentPriorConfig& cfg, const MalaConfig& mala,
                        std::uint64_t seed, StudentKernel kernel = StudentKernel::ScaleMixture);

Chain run_factor_chain(const EntryCounts& data, FractionalExponent alpha,
                       const FactorPriorConfig& cfg, const MalaConfig& mala, std::uint64_t seed);

// --- building blocks, exposed for testing ----------------------------------

/// log L_n^alpha(M) + log pi_st(M) and its gradient. Both targets hold a
/// reference to `data`, which must outlive them.
LogTargetFn student_posterior_target(const EntryCounts& data, FractionalExponent alpha,
                                     const StudentPriorConfig& cfg);

/// Draw of the row precision S ~ Wishart_{d1}(d1 + d2 + 2, (tau^2 I + M M^T)^{-1}).
Matrix student_scale_conditional_draw(const Matrix& m, const StudentPriorConfig& cfg, Rng& rng);

/// Log density of M given S up to a constant, alpha log L_n(M) - tr(M^T S M)/2.
LogTargetFn student_conditional_target(const EntryCounts& data, FractionalExponent alpha,
                                       const Matrix& row_precision);

/// Noise consumed by one factor sweep; lets tests replay a sweep exactly.
struct FactorSweepNoise {
  Matrix xi_L;
  double log_u_L = 0.0;
  Matrix xi_R;
  double log_u_R = 0.0;
  Vector gamma_variates;  // InverseGamma: Gamma(shape, 1) draws, one per column
  Matrix xi_theta;        // Gamma family: K x 1 noise for the log-variance move
  double log_u_theta = 0.0;
};

FactorSweepNoise draw_factor_noise(const FactorState& state, const FactorPriorConfig& cfg,
                                   Rng& rng);

struct FactorStepSizes {
  double L = 0.01;
  double R = 0.01;
  double log_gamma = 0.01;
};

struct FactorSweepResult {
  FactorState state;
  MalaStepResult L;
  MalaStepResult R;
  MalaStepResult log_gamma;  // unused (accepted, prob 1) for the conjugate draw
};

/// One Metropolis-within-Gibbs sweep: L | R, gamma; R | L, gamma; gamma | L, R.
FactorSweepResult factor_sweep(const FactorState& state, const EntryCounts& data,
                               FractionalExponent alpha, const FactorPriorConfig& cfg,
                               const FactorStepSizes& steps, const FactorSweepNoise& noise,
                               bool unadjusted = false);

/// Full log target of the factor chain in (L, R, log gamma) coordinates.
double factor_posterior_log_target(const FactorState& state, const EntryCounts& data,
                                   FractionalExponent alpha, const FactorPriorConfig& cfg);

/// Gradient of factor_posterior_log_target in (L, R, log gamma).
FactorPriorGradient factor_posterior_log_target_grad(const FactorState& state,
                                                     const EntryCounts& data,
                                                     FractionalExponent alpha,
                                                     const FactorPriorConfig& cfg);

}  // namespace onebit
