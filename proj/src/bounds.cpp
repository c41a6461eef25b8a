#include "onebit/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "onebit/core_model.hpp"
#include "onebit/metrics.hpp"

namespace onebit {

namespace {
void require_dims(long n, int d1, int d2) {
  require(n >= 1, "sample size n must be at least 1");
  require(d1 >= 1 && d2 >= 1, "dimensions must be positive");
}
}  // namespace

double rate_factorized(const FactorRateInput& in) {
  require_dims(in.n, in.d1, in.d2);
  require(in.r >= 0, "rank must be nonnegative");
  const double n = double(in.n);
  return in.C * double(in.r) * double(in.d1 + in.d2) * std::log(n * in.d1 * in.d2) / n;
}

double rate_student(const StudentRateInput& in) {
  require_dims(in.n, in.d1, in.d2);
  require(in.r >= 0, "rank must be nonnegative");
  require(in.frob_mstar >= 0.0, "Frobenius norm must be nonnegative");
  if (in.r == 0) return 0.0;  // 0 log(1 + 0/0) = 0
  const double n = double(in.n);
  const double r = double(in.r);
  return 2.0 * r * double(in.d1 + in.d2 + 2) *
         std::log1p(n * in.frob_mstar / std::sqrt(2.0 * r)) / n;
}

double b_default(long n, int d1, int d2, int K, double B) {
  require_dims(n, d1, d2);
  require(K >= 1 && B > 0.0, "b_default needs K >= 1 and B > 0");
  const double nd = double(n) * d1 * d2;
  const double mx = double(std::max(d1, d2));
  return B * B / (512.0 * std::pow(nd, 4) * double(K) * K * mx * mx);
}

double C_a_constant(double a) {
  require(a > 0.0, "C_a needs a > 0");
  return std::log(8.0 * std::sqrt(std::numbers::pi)) + std::lgamma(a) +
         (10.0 * a + 1.0) * std::numbers::ln2 + 3.0;
}

double kl_rho_pi_bound(long n, int d1, int d2, int r, double a) {
  require_dims(n, d1, d2);
  require(r >= 0, "rank must be nonnegative");
  return 2.0 * (1.0 + 2.0 * a) * double(r) * double(d1 + d2) *
         (std::log(double(n) * d1 * d2) + C_a_constant(a));
}

double kl_rho0_student_bound(int d1, int d2, int r, double tau, double frob_mstar) {
  require(d1 >= 1 && d2 >= 1, "dimensions must be positive");
  require(tau > 0.0, "tau must be positive");
  require(r >= 0 && frob_mstar >= 0.0, "rank and norm must be nonnegative");
  if (r == 0) return 0.0;
  const double rr = double(r);
  return 2.0 * rr * double(d1 + d2 + 2) * std::log1p(frob_mstar / (tau * std::sqrt(2.0 * rr)));
}

double delta_radius(long n, int d1, int d2, double B) {
  require_dims(n, d1, d2);
  const double nd = double(n) * d1 * d2;
  return B / (8.0 * nd * nd);
}

const char* to_string(BoundSide side) {
  switch (side) {
    case BoundSide::RenyiTheorem:
      return "renyi";
    case BoundSide::HellingerCorollary:
      return "hellinger";
    case BoundSide::FrobeniusTheorem:
      return "frobenius";
  }
  return "unknown";
}

double concentration_threshold(double epsilon_n, double alpha, BoundSide side,
                               std::optional<double> C1, std::optional<double> C_kappa) {
  require(epsilon_n >= 0.0, "epsilon_n must be nonnegative");
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  switch (side) {
    case BoundSide::RenyiTheorem:
      return 2.0 * (alpha + 1.0) / (1.0 - alpha) * epsilon_n;
    case BoundSide::HellingerCorollary:
      return c_alpha(alpha) * epsilon_n;
    case BoundSide::FrobeniusTheorem:
      require(C1.has_value() && C_kappa.has_value(),
              "the Frobenius threshold needs C1 and C_kappa");
      require(*C1 > 0.0 && *C_kappa > 0.0, "C1 and C_kappa must be positive");
      return c_alpha(alpha) * epsilon_n / (*C1 * *C_kappa);
  }
  return 0.0;
}

BoundCheckResult check_concentration(std::span<const double> runs, long n, double epsilon_n,
                                     double alpha, BoundSide side, std::optional<double> C1,
                                     std::optional<double> C_kappa) {
  require(!runs.empty(), "concentration check needs at least one run");
  require(n >= 1, "sample size n must be at least 1");
  BoundCheckResult res;
  res.side = side;
  res.epsilon_n = epsilon_n;
  res.threshold = concentration_threshold(epsilon_n, alpha, side, C1, C_kappa);
  res.probability_floor = epsilon_n > 0.0 ? 1.0 - 2.0 / (double(n) * epsilon_n)
                                          : -std::numeric_limits<double>::infinity();
  const auto below = std::count_if(runs.begin(), runs.end(),
                                   [&](double v) { return v <= res.threshold; });
  res.empirical_fraction = double(below) / double(runs.size());
  res.trivially_satisfied = res.probability_floor <= 0.0;
  res.pass = res.trivially_satisfied || res.empirical_fraction >= res.probability_floor;
  return res;
}

}  // namespace onebit
