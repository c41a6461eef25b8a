#pragma once

// Metropolis-adjusted Langevin kernel over matrix-valued states, with an
// optional position-independent preconditioner, and dual-averaging step
// size adaptation.

#include <functional>
#include <memory>
#include <vector>

#include "onebit/core_model.hpp"

namespace onebit {

/// Log density with optional gradient output (grad may be nullptr).
using LogTargetFn = std::function<double(const Matrix& x, Matrix* grad)>;

/// Mass matrix P of the proposal x' = x + h P^{-1} g + sqrt(2h) P^{-1/2} xi.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual Matrix apply_inverse(const Matrix& g) const = 0;
  /// Maps standard Gaussian noise to noise with covariance P^{-1}.
  virtual Matrix correlate(const Matrix& xi) const = 0;
  /// Quadratic form <v, P v>.
  virtual double quadratic(const Matrix& v) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  Matrix apply_inverse(const Matrix& g) const override { return g; }
  Matrix correlate(const Matrix& xi) const override { return xi; }
  double quadratic(const Matrix& v) const override { return v.squaredNorm(); }
};

/// Entrywise precision (a diagonal mass matrix).
class DiagonalPreconditioner final : public Preconditioner {
 public:
  explicit DiagonalPreconditioner(Matrix precision);
  Matrix apply_inverse(const Matrix& g) const override;
  Matrix correlate(const Matrix& xi) const override;
  double quadratic(const Matrix& v) const override;

 private:
  Matrix precision_;
  Matrix inv_sqrt_;
};

/// One dense SPD precision block per matrix column.
class ColumnPreconditioner final : public Preconditioner {
 public:
  explicit ColumnPreconditioner(const std::vector<Matrix>& column_precisions);
  Matrix apply_inverse(const Matrix& g) const override;
  Matrix correlate(const Matrix& xi) const override;
  double quadratic(const Matrix& v) const override;

 private:
  std::vector<Eigen::LLT<Matrix>> factors_;
};

/// A state together with its cached log density and gradient.
struct MalaPoint {
  Matrix x;
  double log_p = 0.0;
  Matrix grad;
};

MalaPoint evaluate_point(const LogTargetFn& target, Matrix x);

struct MalaStepResult {
  MalaPoint next;
  bool accepted = false;
  bool nonfinite = false;    // proposal had a non-finite density or gradient
  double accept_prob = 0.0;  // min(1, MH ratio); 0 for non-finite proposals
};

/// Deterministic core of one MALA transition: xi is the standard Gaussian
/// noise (same shape as the state) and log_u the log of a Uniform(0,1) draw.
/// With unadjusted = true the Metropolis correction is skipped (ULA).
MalaStepResult mala_transition(const MalaPoint& current, const LogTargetFn& target,
                               double step_size, const Preconditioner& precond,
                               const Matrix& xi, double log_u, bool unadjusted = false);

/// One MALA step drawing its own noise from rng.
MalaStepResult mala_step(const MalaPoint& current, const LogTargetFn& target, double step_size,
                         const Preconditioner& precond, Rng& rng, bool unadjusted = false);

/// Convenience form with separate density and gradient callables and an
/// identity preconditioner. Returns (next_state, accepted).
std::pair<Matrix, bool> mala_step(const Matrix& current,
                                  const std::function<double(const Matrix&)>& log_target,
                                  const std::function<Matrix(const Matrix&)>& log_target_grad,
                                  double step_size, Rng& rng);

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng);

/// Nesterov dual averaging on log step size, driving the mean acceptance
/// probability toward a target.
class DualAveraging {
 public:
  explicit DualAveraging(double initial_step, double target_accept = 0.574);

  /// Feeds one acceptance probability; returns the next step size to use.
  double update(double accept_prob);
  double current() const { return step_; }
  /// Averaged iterate; the step to freeze once adaptation ends.
  double final_step() const;

 private:
  double target_;
  double mu_;
  double step_;
  double h_bar_ = 0.0;
  double log_step_bar_ = 0.0;
  int t_ = 0;
};

}  // namespace onebit
