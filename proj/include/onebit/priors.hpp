#pragma once

// The two prior families: the hierarchical low-rank factorization prior
// (Gaussian factor columns with Gamma / inverse-Gamma variances) and the
// spectral scaled Student prior det(tau^2 I + M M^T)^{-(d1+d2+2)/2}.

#include <optional>

#include "onebit/core_model.hpp"

namespace onebit {

enum class VarianceFamily { Gamma, InverseGamma };

/// Hyperprior on the column variances. Gamma is parameterized by shape a
/// and scale b; InverseGamma by shape a and scale b (density ~ x^{-a-1} e^{-b/x}).
struct FactorPriorConfig {
  int K = 1;
  double a = 1.0;
  double b = 1.0;
  VarianceFamily family = VarianceFamily::InverseGamma;

  void validate() const;
};

struct FactorState {
  Matrix L;      // d1 x K
  Matrix R;      // d2 x K
  Vector gamma;  // K, strictly positive

  Matrix induced() const { return L * R.transpose(); }
  void validate(int K) const;
};

struct StudentPriorConfig {
  double tau = 1.0;

  void validate() const;
};

/// Ground truth M* = Ubar Vbar^T with the rank-r certificate.
struct TruthSpec {
  int r = 0;
  double B = 1.0;
  Matrix Ubar;  // d1 x K
  Matrix Vbar;  // d2 x K
};

// --- factorization prior -------------------------------------------------

/// Log hyperprior density of a single variance.
double variance_log_density(double gamma, const FactorPriorConfig& cfg);

/// Normalized log density of (L, R, gamma) under the hierarchical prior.
double factor_log_prior(const FactorState& state, const FactorPriorConfig& cfg);

/// factor_log_prior expressed in theta = log(gamma) coordinates, i.e. with
/// the Jacobian term sum_k theta_k added. This is the density that the
/// log-variance Langevin move targets.
double factor_log_prior_logspace(const FactorState& state, const FactorPriorConfig& cfg);

struct FactorPriorGradient {
  Matrix dL;
  Matrix dR;
  Vector dlog_gamma;  // gradient of factor_log_prior_logspace w.r.t. log(gamma)
};

FactorPriorGradient factor_log_prior_grad(const FactorState& state,
                                          const FactorPriorConfig& cfg);

/// Shape and rate of the inverse-Gamma full conditional of gamma_k.
struct InverseGammaParams {
  double shape;
  double scale;
};
InverseGammaParams gamma_conditional(const FactorState& state, const FactorPriorConfig& cfg,
                                     int k);

/// Exact conjugate draw of every gamma_k given (L, R). InverseGamma only;
/// throws UnsupportedOperation for the Gamma family.
Vector gamma_conditional_draw(const FactorState& state, const FactorPriorConfig& cfg, Rng& rng);

/// Same draw with caller-supplied standard Gamma(shape, 1) variates, one per
/// column: gamma_k = scale_k / variates[k].
Vector gamma_conditional_from_variates(const FactorState& state, const FactorPriorConfig& cfg,
                                       const Vector& variates);

/// Draws (L, R, gamma) from the prior hierarchy.
FactorState sample_factor_prior(const FactorPriorConfig& cfg, int d1, int d2, Rng& rng);

// --- spectral scaled Student prior ----------------------------------------

/// -((d1+d2+2)/2) log det(tau^2 I_{d1} + M M^T), via Cholesky of the smaller
/// Gram matrix.
double student_log_prior(const Matrix& m, const StudentPriorConfig& cfg);

/// -(d1+d2+2) (tau^2 I + M M^T)^{-1} M, computed with a linear solve.
Matrix student_log_prior_grad(const Matrix& m, const StudentPriorConfig& cfg);

/// Lower-triangular Bartlett factor A with A A^T ~ Wishart_p(dof, I).
Matrix bartlett_factor(int p, double dof, Rng& rng);

/// Exact draw from the Student prior as a matrix-variate t with 3 degrees of
/// freedom: M = tau A^{-T} X, A the Bartlett factor of Wishart_{d1}(d1 + 2, I)
/// and X a d1 x d2 standard Gaussian matrix.
Matrix sample_student_prior(const StudentPriorConfig& cfg, int d1, int d2, Rng& rng);

// --- truth ---------------------------------------------------------------

/// Number of singular values above rel_tol * s_max.
int numerical_rank(const Matrix& m, double rel_tol = 1e-10);

/// Returns Ubar Vbar^T after checking the sup-norm bound, the zero columns
/// past r and the resulting rank.
Matrix build_truth(const TruthSpec& spec);

}  // namespace onebit
