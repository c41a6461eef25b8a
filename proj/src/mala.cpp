#include "onebit/mala.hpp"

#include <cmath>
#include <limits>

namespace onebit {

DiagonalPreconditioner::DiagonalPreconditioner(Matrix precision)
    : precision_(std::move(precision)) {
  require((precision_.array() > 0.0).all() && precision_.allFinite(),
          "diagonal preconditioner needs positive finite precisions");
  inv_sqrt_ = precision_.array().rsqrt().matrix();
}

Matrix DiagonalPreconditioner::apply_inverse(const Matrix& g) const {
  return g.cwiseQuotient(precision_);
}

Matrix DiagonalPreconditioner::correlate(const Matrix& xi) const {
  return xi.cwiseProduct(inv_sqrt_);
}

double DiagonalPreconditioner::quadratic(const Matrix& v) const {
  return (v.array().square() * precision_.array()).sum();
}

ColumnPreconditioner::ColumnPreconditioner(const std::vector<Matrix>& column_precisions) {
  factors_.reserve(column_precisions.size());
  for (const auto& p : column_precisions) {
    factors_.emplace_back(p);
    require(factors_.back().info() == Eigen::Success,
            "column preconditioner block is not positive definite");
  }
}

Matrix ColumnPreconditioner::apply_inverse(const Matrix& g) const {
  Matrix out(g.rows(), g.cols());
  for (Eigen::Index j = 0; j < g.cols(); ++j) out.col(j) = factors_[j].solve(g.col(j));
  return out;
}

Matrix ColumnPreconditioner::correlate(const Matrix& xi) const {
  // P = L L^T; L^{-T} xi has covariance P^{-1}.
  Matrix out(xi.rows(), xi.cols());
  for (Eigen::Index j = 0; j < xi.cols(); ++j)
    out.col(j) = factors_[j].matrixU().solve(xi.col(j));
  return out;
}

double ColumnPreconditioner::quadratic(const Matrix& v) const {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < v.cols(); ++j)
    acc += (factors_[j].matrixU() * v.col(j)).squaredNorm();
  return acc;
}

MalaPoint evaluate_point(const LogTargetFn& target, Matrix x) {
  MalaPoint p;
  p.grad.resize(x.rows(), x.cols());
  p.log_p = target(x, &p.grad);
  p.x = std::move(x);
  return p;
}

MalaStepResult mala_transition(const MalaPoint& current, const LogTargetFn& target,
                               double step_size, const Preconditioner& precond,
                               const Matrix& xi, double log_u, bool unadjusted) {
  require(step_size > 0.0, "MALA step size must be positive");
  require(std::isfinite(current.log_p), "MALA current state has a non-finite log density");
  MalaStepResult res;
  const Matrix forward_mean = current.x + step_size * precond.apply_inverse(current.grad);
  Matrix proposal = forward_mean + std::sqrt(2.0 * step_size) * precond.correlate(xi);

  MalaPoint cand;
  cand.grad.resize(proposal.rows(), proposal.cols());
  cand.log_p = proposal.allFinite() ? target(proposal, &cand.grad)
                                    : -std::numeric_limits<double>::infinity();
  cand.x = std::move(proposal);
  if (!std::isfinite(cand.log_p) || !cand.grad.allFinite()) {
    res.next = current;
    res.nonfinite = true;
    return res;
  }
  if (unadjusted) {
    res.next = std::move(cand);
    res.accepted = true;
    res.accept_prob = 1.0;
    return res;
  }

  const Matrix reverse_mean = cand.x + step_size * precond.apply_inverse(cand.grad);
  const double scale = 1.0 / (4.0 * step_size);
  const double log_q_forward = -scale * precond.quadratic(cand.x - forward_mean);
  const double log_q_reverse = -scale * precond.quadratic(current.x - reverse_mean);
  const double log_ratio = cand.log_p - current.log_p + log_q_reverse - log_q_forward;

  res.accept_prob = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
  if (log_u < log_ratio) {
    res.next = std::move(cand);
    res.accepted = true;
  } else {
    res.next = current;
  }
  return res;
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> z;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  return m;
}

namespace {
double log_uniform(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = u(rng);
  while (v <= 0.0) v = u(rng);
  return std::log(v);
}
}  // namespace

MalaStepResult mala_step(const MalaPoint& current, const LogTargetFn& target, double step_size,
                         const Preconditioner& precond, Rng& rng, bool unadjusted) {
  const Matrix xi = standard_normal(current.x.rows(), current.x.cols(), rng);
  const double log_u = log_uniform(rng);
  return mala_transition(current, target, step_size, precond, xi, log_u, unadjusted);
}

std::pair<Matrix, bool> mala_step(const Matrix& current,
                                  const std::function<double(const Matrix&)>& log_target,
                                  const std::function<Matrix(const Matrix&)>& log_target_grad,
                                  double step_size, Rng& rng) {
  const LogTargetFn target = [&](const Matrix& x, Matrix* grad) {
    if (grad) *grad = log_target_grad(x);
    return log_target(x);
  };
  const auto res = mala_step(evaluate_point(target, current), target, step_size,
                             IdentityPreconditioner{}, rng);
  return {res.next.x, res.accepted};
}

DualAveraging::DualAveraging(double initial_step, double target_accept)
    : target_(target_accept), mu_(std::log(10.0 * initial_step)), step_(initial_step) {
  require(initial_step > 0.0, "initial step size must be positive");
  log_step_bar_ = std::log(initial_step);
}

double DualAveraging::update(double accept_prob) {
  constexpr double kGamma = 0.05;
  constexpr double kT0 = 10.0;
  constexpr double kKappa = 0.75;
  ++t_;
  const double t = double(t_);
  const double w = 1.0 / (t + kT0);
  h_bar_ = (1.0 - w) * h_bar_ + w * (target_ - accept_prob);
  const double log_step = mu_ - std::sqrt(t) / kGamma * h_bar_;
  const double eta = std::pow(t, -kKappa);
  log_step_bar_ = eta * log_step + (1.0 - eta) * log_step_bar_;
  step_ = std::exp(log_step);
  return step_;
}

double DualAveraging::final_step() const { return std::exp(log_step_bar_); }

}  // namespace onebit
