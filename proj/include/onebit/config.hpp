#pragma once

// Experiment configuration and its flat `section.key = value` file format.
//
//   experiment.d1 = 12            experiment.d2 = 12
//   experiment.r = 1              experiment.n = 2000
//   experiment.alpha = 0.99       experiment.B = 1
//   experiment.kappa = auto       (auto: realized ||M*||_inf)
//   experiment.replications = 20  experiment.master_seed = 1
//   experiment.workers = 1
//   prior.family = student | factor-gamma | factor-inverse-gamma
//   prior.tau = auto | <real>     (auto: 1/n)
//   prior.kernel = scale-mixture | full-mala
//   prior.K = auto | <int>        (auto: min(d1, d2, prior.K_cap))
//   prior.K_cap = 10
//   prior.a = 1
//   prior.b = auto | <real>       (auto: B^2 / [512 (n d1 d2)^4 K^2 max(d1,d2)^2])
//   sampling.pi = uniform | tilted
//   sampling.strength = 4         (max/min ratio of the tilted draw)
//   mala.step_size = 0.01         mala.n_steps = 10000
//   mala.burn_in = auto           (auto: 20% of n_steps)
//   mala.thin = 5                 mala.adapt = true
//   mala.unadjusted = false
//   sweep.n_grid = 500,1000,2000,4000,8000
//   sweep.r_grid = 1,2
//   sweep.r_fixed_n = 4000
//
// Blank lines and lines starting with '#' are ignored. Unknown keys are errors.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "onebit/chains.hpp"

namespace onebit {

enum class PriorFamily { Student, FactorGamma, FactorInverseGamma };

const char* to_string(PriorFamily f);
PriorFamily parse_prior_family(const std::string& s);

enum class PiKind { Uniform, Tilted };

struct PiSpec {
  PiKind kind = PiKind::Uniform;
  double strength = 1.0;  // Tilted: entries ~ U[1, strength] before normalizing
};

struct PriorSettings {
  PriorFamily family = PriorFamily::Student;
  std::optional<double> tau;  // nullopt: 1/n
  StudentKernel kernel = StudentKernel::ScaleMixture;
  std::optional<int> K;  // nullopt: min(d1, d2, K_cap)
  int K_cap = 10;
  double a = 1.0;
  std::optional<double> b;  // nullopt: b_default
};

struct ExperimentConfig {
  int d1 = 8;
  int d2 = 8;
  int r = 1;
  long n = 1000;
  double B = 1.0;
  std::optional<double> kappa;  // nullopt: realized ||M*||_inf
  double alpha = 0.99;
  PriorSettings prior;
  PiSpec pi;
  MalaConfig mala;
  int replications = 20;
  std::uint64_t master_seed = 1;
  int workers = 1;

  std::vector<long> n_grid{500, 1000, 2000, 4000, 8000};
  std::vector<int> r_grid;
  long r_fixed_n = 4000;

  void validate() const;

  double resolved_tau() const;
  int resolved_K() const;
  double resolved_b() const;
  StudentPriorConfig student_prior() const;
  FactorPriorConfig factor_prior() const;
};

/// Parses the flat key-value format; unspecified keys keep their defaults.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form (every key, fixed order); parse_config round-trips it.
std::string serialize_config(const ExperimentConfig& cfg);

/// 16-hex-digit digest of the canonical form with master_seed and workers
/// excluded, so replicates of one design share a digest.
std::string config_digest(const ExperimentConfig& cfg);

/// Seed of chain/replication `index` under master seed s: s * 10007 + index.
std::uint64_t split_seed(std::uint64_t master_seed, std::uint64_t index);

}  // namespace onebit
