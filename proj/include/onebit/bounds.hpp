#pragma once

// Closed-form concentration rates, hyperparameter defaults and bound
// constants, plus the bookkeeping that checks probability statements of the
// form P[integral <= threshold] >= 1 - 2/(n eps_n) against replicated runs.

#include <optional>
#include <span>

namespace onebit {

struct FactorRateInput {
  long n = 1;
  int d1 = 1;
  int d2 = 1;
  int r = 0;
  double a = 1.0;
  double B = 1.0;
  double C = 1.0;  // the unspecified universal constant C_{a,B}
};

struct StudentRateInput {
  long n = 1;
  int d1 = 1;
  int d2 = 1;
  int r = 0;
  double frob_mstar = 0.0;  // ||M*||_F
};

/// C r (d1 + d2) log(n d1 d2) / n.
double rate_factorized(const FactorRateInput& in);

/// 2 r (d1 + d2 + 2) log(1 + n ||M*||_F / sqrt(2r)) / n, and 0 when r = 0.
double rate_student(const StudentRateInput& in);

/// B^2 / [512 (n d1 d2)^4 K^2 max(d1, d2)^2].
double b_default(long n, int d1, int d2, int K, double B);

/// log(8 sqrt(pi) Gamma(a) 2^{10a+1}) + 3.
double C_a_constant(double a);

/// 2 (1 + 2a) r (d1 + d2) [log(n d1 d2) + C_a].
double kl_rho_pi_bound(long n, int d1, int d2, int r, double a);

/// 2 r (d1 + d2 + 2) log(1 + ||M*||_F / (tau sqrt(2r))), and 0 when r = 0.
double kl_rho0_student_bound(int d1, int d2, int r, double tau, double frob_mstar);

/// Radius of the proof-device neighbourhood, B / [8 (n d1 d2)^2].
double delta_radius(long n, int d1, int d2, double B);

enum class BoundSide { RenyiTheorem, HellingerCorollary, FrobeniusTheorem };

const char* to_string(BoundSide side);

/// Renyi: 2(alpha+1)/(1-alpha) eps; Hellinger: c_alpha eps;
/// Frobenius: c_alpha eps / (C1 C_kappa). C1 and C_kappa are required for
/// the Frobenius side only.
double concentration_threshold(double epsilon_n, double alpha, BoundSide side,
                               std::optional<double> C1 = std::nullopt,
                               std::optional<double> C_kappa = std::nullopt);

struct BoundCheckResult {
  BoundSide side = BoundSide::RenyiTheorem;
  double epsilon_n = 0.0;
  double threshold = 0.0;
  double probability_floor = 0.0;  // 1 - 2/(n eps_n); -inf when eps_n = 0
  double empirical_fraction = 0.0;
  bool trivially_satisfied = false;  // floor <= 0: the statement is vacuous
  bool pass = false;
};

BoundCheckResult check_concentration(std::span<const double> runs, long n, double epsilon_n,
                                     double alpha, BoundSide side,
                                     std::optional<double> C1 = std::nullopt,
                                     std::optional<double> C_kappa = std::nullopt);

}  // namespace onebit
