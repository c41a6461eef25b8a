#include "onebit/priors.hpp"

#include <cmath>
#include <numbers>

namespace onebit {

void FactorPriorConfig::validate() const {
  require(K >= 1, "factor prior needs K >= 1");
  require(a > 0.0 && std::isfinite(a), "factor prior shape a must be positive");
  require(b > 0.0 && std::isfinite(b), "factor prior scale b must be positive");
}

void FactorState::validate(int K) const {
  require(L.cols() == K && R.cols() == K && gamma.size() == K,
          "factor state does not match K");
  require(L.rows() >= 1 && R.rows() >= 1, "factor state has an empty dimension");
  require((gamma.array() > 0.0).all() && gamma.allFinite(),
          "column variances must be positive and finite");
}

void StudentPriorConfig::validate() const {
  require(tau > 0.0 && std::isfinite(tau), "Student prior tau must be positive");
}

double variance_log_density(double gamma, const FactorPriorConfig& cfg) {
  require(gamma > 0.0, "variance must be positive");
  const double a = cfg.a;
  const double b = cfg.b;
  if (cfg.family == VarianceFamily::Gamma) {
    return (a - 1.0) * std::log(gamma) - gamma / b - std::lgamma(a) - a * std::log(b);
  }
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(gamma) - b / gamma;
}

double factor_log_prior(const FactorState& state, const FactorPriorConfig& cfg) {
  cfg.validate();
  state.validate(cfg.K);
  const double d = double(state.L.rows() + state.R.rows());
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  double acc = 0.0;
  for (int k = 0; k < cfg.K; ++k) {
    const double g = state.gamma(k);
    const double sq = state.L.col(k).squaredNorm() + state.R.col(k).squaredNorm();
    acc += variance_log_density(g, cfg);
    acc += -0.5 * d * (log_two_pi + std::log(g)) - 0.5 * sq / g;
  }
  return acc;
}

double factor_log_prior_logspace(const FactorState& state, const FactorPriorConfig& cfg) {
  return factor_log_prior(state, cfg) + state.gamma.array().log().sum();
}

FactorPriorGradient factor_log_prior_grad(const FactorState& state,
                                          const FactorPriorConfig& cfg) {
  cfg.validate();
  state.validate(cfg.K);
  const Vector inv = state.gamma.cwiseInverse();
  FactorPriorGradient g;
  g.dL = -(state.L * inv.asDiagonal());
  g.dR = -(state.R * inv.asDiagonal());
  g.dlog_gamma.resize(cfg.K);
  const double d = double(state.L.rows() + state.R.rows());
  for (int k = 0; k < cfg.K; ++k) {
    const double gk = state.gamma(k);
    const double sq = state.L.col(k).squaredNorm() + state.R.col(k).squaredNorm();
    double hyper = 0.0;  // gamma * d/dgamma log pi(gamma) + 1 (Jacobian)
    if (cfg.family == VarianceFamily::Gamma) {
      hyper = cfg.a - gk / cfg.b;
    } else {
      hyper = -cfg.a + cfg.b / gk;
    }
    g.dlog_gamma(k) = hyper - 0.5 * d + 0.5 * sq / gk;
  }
  return g;
}

InverseGammaParams gamma_conditional(const FactorState& state, const FactorPriorConfig& cfg,
                                     int k) {
  const double d = double(state.L.rows() + state.R.rows());
  const double sq = state.L.col(k).squaredNorm() + state.R.col(k).squaredNorm();
  return {cfg.a + 0.5 * d, cfg.b + 0.5 * sq};
}

Vector gamma_conditional_from_variates(const FactorState& state, const FactorPriorConfig& cfg,
                                       const Vector& variates) {
  if (cfg.family != VarianceFamily::InverseGamma) {
    throw UnsupportedOperation(
        "conjugate variance draw requires the inverse-Gamma family; "
        "use the log-variance Langevin move for Gamma");
  }
  cfg.validate();
  require(variates.size() == cfg.K, "need one Gamma variate per column");
  Vector out(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    out(k) = gamma_conditional(state, cfg, k).scale / variates(k);
  }
  return out;
}

Vector gamma_conditional_draw(const FactorState& state, const FactorPriorConfig& cfg, Rng& rng) {
  if (cfg.family != VarianceFamily::InverseGamma) {
    throw UnsupportedOperation(
        "conjugate variance draw requires the inverse-Gamma family; "
        "use the log-variance Langevin move for Gamma");
  }
  state.validate(cfg.K);
  Vector variates(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    std::gamma_distribution<double> g(gamma_conditional(state, cfg, k).shape, 1.0);
    variates(k) = g(rng);
  }
  return gamma_conditional_from_variates(state, cfg, variates);
}

FactorState sample_factor_prior(const FactorPriorConfig& cfg, int d1, int d2, Rng& rng) {
  cfg.validate();
  require(d1 >= 1 && d2 >= 1, "dimensions must be positive");
  FactorState s;
  s.gamma.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    std::gamma_distribution<double> g(cfg.a, 1.0);
    const double x = g(rng);
    s.gamma(k) = cfg.family == VarianceFamily::Gamma ? cfg.b * x : cfg.b / x;
  }
  std::normal_distribution<double> z;
  s.L.resize(d1, cfg.K);
  s.R.resize(d2, cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    const double sd = std::sqrt(s.gamma(k));
    for (int i = 0; i < d1; ++i) s.L(i, k) = sd * z(rng);
    for (int j = 0; j < d2; ++j) s.R(j, k) = sd * z(rng);
  }
  return s;
}

namespace {

// Cholesky of the smaller Gram matrix tau^2 I + M M^T (d1 <= d2) or
// tau^2 I + M^T M (d2 < d1).
Eigen::LLT<Matrix> small_gram(const Matrix& m, double tau2, bool& transposed) {
  transposed = m.cols() < m.rows();
  const Eigen::Index p = transposed ? m.cols() : m.rows();
  Matrix gram = Matrix::Identity(p, p) * tau2;
  if (transposed) {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose());
  } else {
    gram.selfadjointView<Eigen::Lower>().rankUpdate(m);
  }
  Eigen::LLT<Matrix> llt(gram.selfadjointView<Eigen::Lower>());
  require(llt.info() == Eigen::Success, "Student prior Gram matrix is not positive definite");
  return llt;
}

}  // namespace

double student_log_prior(const Matrix& m, const StudentPriorConfig& cfg) {
  cfg.validate();
  require(m.size() > 0 && m.allFinite(), "Student prior needs a finite nonempty matrix");
  const double d1 = double(m.rows());
  const double d2 = double(m.cols());
  const double tau2 = cfg.tau * cfg.tau;
  bool transposed = false;
  const auto llt = small_gram(m, tau2, transposed);
  double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  // det(tau^2 I_{d1} + M M^T) = tau^{2(d1-d2)} det(tau^2 I_{d2} + M^T M)
  if (transposed) logdet += (d1 - d2) * std::log(tau2);
  return -0.5 * (d1 + d2 + 2.0) * logdet;
}

Matrix student_log_prior_grad(const Matrix& m, const StudentPriorConfig& cfg) {
  cfg.validate();
  require(m.size() > 0 && m.allFinite(), "Student prior needs a finite nonempty matrix");
  const double c = double(m.rows() + m.cols() + 2);
  bool transposed = false;
  const auto llt = small_gram(m, cfg.tau * cfg.tau, transposed);
  if (transposed) {
    // (tau^2 I + M M^T)^{-1} M = M (tau^2 I + M^T M)^{-1}
    return -c * llt.solve(m.transpose()).transpose();
  }
  return -c * llt.solve(m);
}

Matrix bartlett_factor(int p, double dof, Rng& rng) {
  require(p >= 1, "Wishart dimension must be positive");
  require(dof > p - 1, "Wishart degrees of freedom must exceed p - 1");
  Matrix a = Matrix::Zero(p, p);
  std::normal_distribution<double> z;
  for (int i = 0; i < p; ++i) {
    std::chi_squared_distribution<double> chi(dof - i);
    a(i, i) = std::sqrt(chi(rng));
    for (int j = 0; j < i; ++j) a(i, j) = z(rng);
  }
  return a;
}

Matrix sample_student_prior(const StudentPriorConfig& cfg, int d1, int d2, Rng& rng) {
  cfg.validate();
  require(d1 >= 1 && d2 >= 1, "Student prior draw needs positive dimensions");
  // Matrix t with nu = 3: exponent (nu + d1 + d2 - 1)/2 = (d1 + d2 + 2)/2.
  const Matrix a = bartlett_factor(d1, d1 + 2.0, rng);
  Matrix x(d1, d2);
  std::normal_distribution<double> z;
  for (int j = 0; j < d2; ++j)
    for (int i = 0; i < d1; ++i) x(i, j) = z(rng);
  // Columns of A^{-T} X have covariance (A A^T)^{-1}.
  return cfg.tau * a.transpose().triangularView<Eigen::Upper>().solve(x);
}

int numerical_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > rel_tol * s(0)) ++rank;
  return rank;
}

Matrix build_truth(const TruthSpec& spec) {
  require(spec.r >= 0, "truth rank must be nonnegative");
  require(spec.B > 0.0, "truth bound B must be positive");
  require(spec.Ubar.cols() == spec.Vbar.cols(), "truth factors need the same column count");
  require(spec.Ubar.rows() >= 1 && spec.Vbar.rows() >= 1, "truth factors need positive rows");
  require(spec.r <= spec.Ubar.cols(), "truth rank exceeds factor columns");
  const double sup_u = spec.Ubar.size() ? spec.Ubar.cwiseAbs().maxCoeff() : 0.0;
  const double sup_v = spec.Vbar.size() ? spec.Vbar.cwiseAbs().maxCoeff() : 0.0;
  require(sup_u <= spec.B && sup_v <= spec.B, "truth factors exceed the sup-norm bound B");
  const Eigen::Index extra = spec.Ubar.cols() - spec.r;
  if (extra > 0) {
    require(spec.Ubar.rightCols(extra).isZero(0.0) && spec.Vbar.rightCols(extra).isZero(0.0),
            "truth factor columns past r must be zero");
  }
  Matrix m = spec.Ubar * spec.Vbar.transpose();
  require(numerical_rank(m) <= spec.r, "truth matrix rank exceeds r");
  return m;
}

}  // namespace onebit
