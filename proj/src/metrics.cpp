#include "onebit/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace onebit {

namespace {

void require_interior(double p, const char* name) {
  require(p > 0.0 && p < 1.0, std::string(name) + " must lie strictly inside (0, 1)");
}

void require_probability(double p, const char* name) {
  require(p >= 0.0 && p <= 1.0, std::string(name) + " must lie in [0, 1]");
}

void require_same_shape(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "matrix shapes differ");
}

// Near p = q every divergence is a sum of terms that cancel to second order.
// Each is rewritten as a sum of nonnegative gaps y phi(x/y - 1), with phi
// evaluated by its power series when the ratio is close to one.

// q [alpha e - ((1 + e)^alpha - 1)] with p = q (1 + e): the weighted AM-GM
// gap alpha p + (1 - alpha) q - p^alpha q^(1 - alpha), from log p and log q.
double amgm_gap(double lp, double lq, double alpha) {
  const double d = lp - lq;
  if (std::abs(d) < 0.18) {
    const double e = std::expm1(d);
    double c = alpha, pw = e, sum = 0.0;
    for (int k = 2; k < 80; ++k) {
      c *= (alpha - k + 1) / k;
      pw *= e;
      const double t = c * pw;
      sum -= t;
      if (std::abs(t) <= 1e-18 * std::abs(sum)) break;
    }
    return std::exp(lq) * sum;
  }
  return alpha * std::exp(lp) + (1.0 - alpha) * std::exp(lq) -
         std::exp(alpha * lp + (1.0 - alpha) * lq);
}

// p log(p / q) - (p - q), same conventions.
double kl_gap(double lp, double lq) {
  const double d = lp - lq;
  if (std::abs(d) < 0.18) {
    const double e = std::expm1(d);
    double pw = -e, sum = 0.0;
    for (int k = 2; k < 80; ++k) {
      pw *= -e;
      const double t = pw / (double(k) * (k - 1));
      sum += t;
      if (std::abs(t) <= 1e-18 * std::abs(sum)) break;
    }
    return std::exp(lq) * sum;
  }
  const double p = std::exp(lp);
  return p * d - (p - std::exp(lq));
}

// Renyi from log-probabilities of the two outcomes under each law.
double renyi_from_logs(double lp, double lq, double lp1, double lq1, double alpha) {
  const double delta = amgm_gap(lp, lq, alpha) + amgm_gap(lp1, lq1, alpha);
  if (delta < 0.5) return std::log1p(-delta) / (alpha - 1.0);
  // far apart: 1 - delta itself is the accurate quantity
  const double u = alpha * lp + (1.0 - alpha) * lq;
  const double v = alpha * lp1 + (1.0 - alpha) * lq1;
  const double hi = std::max(u, v);
  return (hi + std::log1p(std::exp(std::min(u, v) - hi))) / (alpha - 1.0);
}

double kl_from_logs(double lp, double lq, double lp1, double lq1) {
  return kl_gap(lp, lq) + kl_gap(lp1, lq1);
}

// sqrt(a) - sqrt(b) from log a, log b.
double root_diff(double la, double lb) { return std::exp(0.5 * lb) * std::expm1(0.5 * (la - lb)); }

// Logit-scale forms: p = f(x), q = f(y). These never round p or q to 0 or 1.
double logit_kl(double x, double y) {
  return kl_from_logs(log_logistic(x), log_logistic(y), log_logistic(-x), log_logistic(-y));
}

double logit_hellinger_sq(double x, double y) {
  const double a = root_diff(log_logistic(x), log_logistic(y));
  const double b = root_diff(log_logistic(-x), log_logistic(-y));
  return a * a + b * b;
}

double logit_renyi(double x, double y, double alpha) {
  return renyi_from_logs(log_logistic(x), log_logistic(y), log_logistic(-x), log_logistic(-y),
                         alpha);
}

}  // namespace

double bernoulli_kl(double p, double q) {
  require_interior(p, "p");
  require_interior(q, "q");
  return kl_from_logs(std::log(p), std::log(q), std::log1p(-p), std::log1p(-q));
}

double bernoulli_hellinger_sq(double p, double q) {
  require_probability(p, "p");
  require_probability(q, "q");
  auto diff = [](double u, double v) {
    const double den = std::sqrt(u) + std::sqrt(v);
    return den > 0.0 ? (u - v) / den : 0.0;
  };
  const double a = diff(p, q);
  const double b = diff(1.0 - p, 1.0 - q);
  return a * a + b * b;
}

double bernoulli_renyi(double p, double q, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "Renyi order must lie in (0, 1)");
  require_interior(p, "p");
  require_interior(q, "q");
  return renyi_from_logs(std::log(p), std::log(q), std::log1p(-p), std::log1p(-q), alpha);
}

double joint_divergence(const Matrix& a, const Matrix& b, const SamplingDistribution& pi,
                        const DivergenceKind& kind) {
  require_same_shape(a, b);
  require(pi.rows() == a.rows() && pi.cols() == a.cols(),
          "sampling distribution shape differs from the matrices");
  if (kind.type == DivergenceType::Renyi) {
    require(kind.alpha > 0.0 && kind.alpha < 1.0, "Renyi order must lie in (0, 1)");
  }
  double acc = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double w = pi.probs()(i, j);
      if (w == 0.0) continue;
      const double x = a(i, j);
      const double y = b(i, j);
      double d = 0.0;
      switch (kind.type) {
        case DivergenceType::KL:
          d = logit_kl(x, y);
          break;
        case DivergenceType::HellingerSq:
          d = logit_hellinger_sq(x, y);
          break;
        case DivergenceType::Renyi:
          d = logit_renyi(x, y, kind.alpha);
          break;
      }
      acc += w * d;
    }
  }
  if (kind.normalization == Normalization::PaperNormalized) {
    acc /= double(a.rows()) * double(a.cols());
  }
  return acc;
}

double c_alpha(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "c_alpha needs alpha in (0, 1)");
  if (alpha >= 0.5) return 2.0 * (alpha + 1.0) / (1.0 - alpha);
  return 2.0 * (alpha + 1.0) / alpha;
}

double C_kappa(double kappa) {
  require(kappa >= 0.0 && std::isfinite(kappa), "kappa must be finite and nonnegative");
  // f(k)(1 - f(k)) / 8 written without overflow: e^{-k} / (8 (1 + e^{-k})^2).
  const double e = std::exp(-kappa);
  return e / (8.0 * (1.0 + e) * (1.0 + e));
}

ConstantsReport constants_report(double alpha, double kappa, const SamplingDistribution& pi) {
  return {c_alpha(alpha), C_kappa(kappa), kappa, pi.c1()};
}

double frobenius_error(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b);
  return (a - b).norm();
}

double frobenius_sq_normalized(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b);
  return (a - b).squaredNorm() / (double(a.rows()) * double(a.cols()));
}

double sup_error(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b);
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace onebit
