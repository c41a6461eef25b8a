#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "doctest.h"
#include "onebit/priors.hpp"
#include "support.hpp"

using namespace onebit;
using namespace onebit::testing;

namespace {

double svd_log_prior(const Matrix& m, double tau) {
  const Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  const int d1 = int(m.rows()), d2 = int(m.cols());
  const double c = 0.5 * (d1 + d2 + 2);
  double acc = 0.0;
  for (int j = 0; j < s.size(); ++j) acc += std::log(tau * tau + s(j) * s(j));
  // singular values beyond min(d1, d2) are zero on the d1 side
  acc += (d1 - int(s.size())) * std::log(tau * tau);
  return -c * acc;
}

Matrix random_orthogonal(int n, Rng& rng) {
  const Matrix a = uniform_matrix(n, n, -1, 1, rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(n, n);
}

}  // namespace

TEST_CASE("factor prior is exchangeable in columns") {
  Rng rng(1);
  FactorPriorConfig cfg{3, 1.5, 0.7, VarianceFamily::InverseGamma};
  FactorState s = random_factor_state(4, 5, 3, rng);
  FactorState t = s;
  t.L.col(0).swap(t.L.col(2));
  t.R.col(0).swap(t.R.col(2));
  std::swap(t.gamma(0), t.gamma(2));
  CHECK(factor_log_prior(s, cfg) == doctest::Approx(factor_log_prior(t, cfg)).epsilon(1e-14));
  cfg.family = VarianceFamily::Gamma;
  CHECK(factor_log_prior(s, cfg) == doctest::Approx(factor_log_prior(t, cfg)).epsilon(1e-14));
}

TEST_CASE("factor prior closed-form difference, inverse-gamma") {
  FactorPriorConfig cfg{1, 2.0, 1.0, VarianceFamily::InverseGamma};
  FactorState s;
  s.L = Matrix::Zero(1, 1);
  s.R = Matrix::Zero(1, 1);
  s.gamma = Vector::Constant(1, 1.0);
  FactorState t = s;
  t.gamma(0) = 2.0;
  const double hyper = (-3.0 * std::log(1.0) - 1.0) - (-3.0 * std::log(2.0) - 0.5);
  // L and R each contribute a Gaussian normalization term
  const double gauss = 2.0 * (-0.5 * std::log(2 * std::numbers::pi * 1.0) +
                              0.5 * std::log(2 * std::numbers::pi * 2.0));
  CHECK(factor_log_prior(s, cfg) - factor_log_prior(t, cfg) ==
        doctest::Approx(hyper + gauss).epsilon(1e-12));
}

TEST_CASE("factor prior with L = 0 reduces to the normalization terms") {
  Rng rng(2);
  FactorPriorConfig cfg{2, 1.0, 1.0, VarianceFamily::Gamma};
  FactorState s = random_factor_state(3, 4, 2, rng);
  FactorState z = s;
  z.L.setZero();
  const double two_pi = 2 * std::numbers::pi;
  double expected = 0.0;
  for (int k = 0; k < 2; ++k) {
    expected += variance_log_density(s.gamma(k), cfg);
    expected += -0.5 * 3 * std::log(two_pi * s.gamma(k));
    expected += -0.5 * 4 * std::log(two_pi * s.gamma(k)) -
                0.5 * s.R.col(k).squaredNorm() / s.gamma(k);
  }
  CHECK(factor_log_prior(z, cfg) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("factor prior rejects nonpositive variances") {
  FactorPriorConfig cfg{1, 1.0, 1.0, VarianceFamily::Gamma};
  FactorState s;
  s.L = Matrix::Zero(2, 1);
  s.R = Matrix::Zero(2, 1);
  s.gamma = Vector::Constant(1, 0.0);
  CHECK_THROWS_AS(factor_log_prior(s, cfg), ContractViolation);
  s.gamma(0) = -1.0;
  CHECK_THROWS_AS(factor_log_prior_grad(s, cfg), ContractViolation);
}

TEST_CASE("factor prior gradient matches finite differences") {
  Rng rng(7);
  for (VarianceFamily fam : {VarianceFamily::Gamma, VarianceFamily::InverseGamma}) {
    for (int rep = 0; rep < 20; ++rep) {
      const FactorPriorConfig cfg{3, 1.7, 0.8, fam};
      const FactorState s = random_factor_state(5, 4, 3, rng);
      const FactorPriorGradient g = factor_log_prior_grad(s, cfg);
      const Matrix fl = numeric_gradient(
          [&](const Matrix& x) {
            FactorState t = s;
            t.L = x;
            return factor_log_prior(t, cfg);
          },
          s.L);
      const Matrix fr = numeric_gradient(
          [&](const Matrix& x) {
            FactorState t = s;
            t.R = x;
            return factor_log_prior(t, cfg);
          },
          s.R);
      const Matrix theta = s.gamma.array().log().matrix();
      const Matrix ft = numeric_gradient(
          [&](const Matrix& x) {
            FactorState t = s;
            t.gamma = x.col(0).array().exp().matrix();
            return factor_log_prior_logspace(t, cfg);
          },
          theta);
      CHECK(relative_error(g.dL, fl) <= 1e-5);
      CHECK(relative_error(g.dR, fr) <= 1e-5);
      CHECK(relative_error(Matrix(g.dlog_gamma), ft) <= 1e-5);
    }
  }
}

TEST_CASE("factor prior gradient closed forms") {
  FactorPriorConfig cfg{1, 2.0, 1.0, VarianceFamily::InverseGamma};
  FactorState s;
  s.L = Matrix::Zero(2, 1);
  s.R = Matrix::Zero(3, 1);
  s.gamma = Vector::Constant(1, 1e6);
  const FactorPriorGradient g = factor_log_prior_grad(s, cfg);
  CHECK(g.dL.norm() == 0.0);
  CHECK(g.dR.norm() == 0.0);
  // -a + b/gamma - (d1 + d2)/2 + 0 -> -a - 5/2 as gamma grows
  CHECK(g.dlog_gamma(0) == doctest::Approx(-2.0 + 1e-6 - 2.5).epsilon(1e-12));
}

TEST_CASE("gamma conditional: shape, scale and the unsupported family") {
  Rng rng(4);
  FactorPriorConfig cfg{2, 2.0, 1.0, VarianceFamily::InverseGamma};
  FactorState s = random_factor_state(3, 2, 2, rng);
  const auto p = gamma_conditional(s, cfg, 0);
  CHECK(p.shape == doctest::Approx(2.0 + 2.5));
  const double sq = s.L.col(0).squaredNorm() + s.R.col(0).squaredNorm();
  CHECK(p.scale == doctest::Approx(1.0 + 0.5 * sq));
  FactorState d = s;
  d.L *= 2.0;
  d.R *= 2.0;
  CHECK(gamma_conditional(d, cfg, 0).scale - cfg.b ==
        doctest::Approx(4.0 * (p.scale - cfg.b)).epsilon(1e-13));
  CHECK(gamma_conditional(d, cfg, 0).shape == p.shape);

  cfg.family = VarianceFamily::Gamma;
  CHECK_THROWS_AS(gamma_conditional_draw(s, cfg, rng), UnsupportedOperation);
}

TEST_CASE("gamma conditional draw moments") {
  Rng rng(8);
  FactorPriorConfig cfg{1, 2.0, 1.0, VarianceFamily::InverseGamma};
  FactorState s;
  s.L = Matrix::Zero(1, 1);
  s.R = Matrix::Zero(1, 1);
  s.gamma = Vector::Constant(1, 1.0);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double g = gamma_conditional_draw(s, cfg, rng)(0);
    sum += g;
    sum2 += g * g;
  }
  // InverseGamma(3, 1): mean 1/2, variance 1/4
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(mean - 0.5) <= 3 * se);
}

TEST_CASE("gamma conditional draw leaves the conditional invariant") {
  Rng rng(9);
  FactorPriorConfig cfg{1, 2.0, 1.0, VarianceFamily::InverseGamma};
  FactorState s = random_factor_state(2, 2, 1, rng);
  const int n = 100000;
  std::vector<double> first(n), second(n);
  for (int k = 0; k < n; ++k) {
    first[k] = gamma_conditional_draw(s, cfg, rng)(0);
    FactorState t = s;
    t.gamma(0) = first[k];
    second[k] = gamma_conditional_draw(t, cfg, rng)(0);
  }
  auto moments = [](const std::vector<double>& v) {
    double m = 0, m2 = 0;
    for (double x : v) {
      m += x;
      m2 += x * x;
    }
    m /= double(v.size());
    return std::pair{m, m2 / double(v.size()) - m * m};
  };
  const auto [m1, v1] = moments(first);
  const auto [m2, v2] = moments(second);
  const double se = std::sqrt((v1 + v2) / n);
  CHECK(std::abs(m1 - m2) <= 3 * se);
  // conditional: InverseGamma(a + 2, b + sq/2) has a finite variance
  const auto p = gamma_conditional(s, cfg, 0);
  const double exact_var = p.scale * p.scale / ((p.shape - 1) * (p.shape - 1) * (p.shape - 2));
  CHECK(v2 == doctest::Approx(exact_var).epsilon(0.1));
}

TEST_CASE("student log prior examples") {
  StudentPriorConfig cfg{1.0};
  Matrix z = Matrix::Zero(1, 1);
  Matrix o = Matrix::Ones(1, 1);
  CHECK(student_log_prior(z, cfg) - student_log_prior(o, cfg) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));

  Rng rng(12);
  const Matrix m = uniform_matrix(3, 4, -2, 2, rng);
  const Matrix u = random_orthogonal(3, rng);
  const Matrix v = random_orthogonal(4, rng);
  CHECK(student_log_prior(u * m * v.transpose(), cfg) ==
        doctest::Approx(student_log_prior(m, cfg)).epsilon(1e-12));
}

TEST_CASE("student log prior matches the singular-value form") {
  Rng rng(13);
  std::uniform_int_distribution<int> d1d(1, 20), d2d(1, 30);
  std::uniform_real_distribution<double> tau(0.01, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    const int d1 = d1d(rng), d2 = d2d(rng);
    const double t = tau(rng);
    const Matrix m = uniform_matrix(d1, d2, -2, 2, rng);
    const double oracle = svd_log_prior(m, t);
    const double v = student_log_prior(m, StudentPriorConfig{t});
    CHECK(std::abs(v - oracle) <= 1e-10 * std::abs(oracle));
  }
}

TEST_CASE("student log prior gradient") {
  StudentPriorConfig cfg{1.0};
  CHECK(student_log_prior_grad(Matrix::Zero(3, 2), cfg).norm() == 0.0);
  CHECK(student_log_prior_grad(Matrix::Ones(1, 1), cfg)(0, 0) == doctest::Approx(-2.0));

  Rng rng(14);
  for (int rep = 0; rep < 20; ++rep) {
    for (auto [d1, d2] : {std::pair{3, 5}, std::pair{5, 3}}) {
      const StudentPriorConfig c{0.2 + 0.1 * rep};
      const Matrix m = uniform_matrix(d1, d2, -2, 2, rng);
      const Matrix fd =
          numeric_gradient([&](const Matrix& x) { return student_log_prior(x, c); }, m);
      CHECK(relative_error(student_log_prior_grad(m, c), fd) <= 1e-5);
    }
  }
}

TEST_CASE("student prior draws: moment bound and symmetry") {
  Rng rng(15);
  const StudentPriorConfig cfg{0.1};
  const int n = 10000;
  double sum = 0.0, sum2 = 0.0;
  Matrix mean = Matrix::Zero(3, 3);
  std::vector<double> entry(n);
  for (int k = 0; k < n; ++k) {
    const Matrix m = sample_student_prior(cfg, 3, 3, rng);
    const double f = m.squaredNorm();
    sum += f;
    sum2 += f * f;
    mean += m;
    entry[k] = m(0, 0);
  }
  const double avg = sum / n;
  const double se = std::sqrt((sum2 / n - avg * avg) / n);
  CHECK(avg <= 9 * 0.01 + 3 * se);

  double e_mean = 0, e_sq = 0;
  for (double x : entry) {
    e_mean += x;
    e_sq += x * x;
  }
  e_mean /= n;
  const double e_se = std::sqrt((e_sq / n - e_mean * e_mean) / n);
  CHECK(std::abs(e_mean) <= 3 * e_se);
  CHECK_THROWS_AS(sample_student_prior(cfg, 0, 3, rng), ContractViolation);
}

TEST_CASE("student prior draws: 1-D density goodness of fit") {
  // density (tau^2 + m^2)^{-2} normalized: 2 tau^3 / (pi (tau^2 + m^2)^2).
  // Its CDF is F(m) = 1/2 + (atan(m/tau) + tau m / (tau^2 + m^2)) / pi.
  Rng rng(16);
  const double tau = 0.7;
  const StudentPriorConfig cfg{tau};
  auto cdf = [&](double m) {
    return 0.5 + (std::atan(m / tau) + tau * m / (tau * tau + m * m)) / std::numbers::pi;
  };
  const int n = 20000;
  const int bins = 20;
  std::vector<int> counts(bins, 0);
  for (int k = 0; k < n; ++k) {
    const double u = cdf(sample_student_prior(cfg, 1, 1, rng)(0, 0));
    counts[std::min(bins - 1, int(u * bins))]++;
  }
  double chi2 = 0.0;
  const double e = double(n) / bins;
  for (int c : counts) chi2 += (c - e) * (c - e) / e;
  // 19 degrees of freedom; the 0.999 quantile is 43.8
  CHECK(chi2 < 43.8);
}

TEST_CASE("build_truth examples") {
  TruthSpec zero{0, 1.0, Matrix::Zero(4, 1), Matrix::Zero(3, 1)};
  CHECK(build_truth(zero).norm() == 0.0);

  TruthSpec ones{1, 1.5, Matrix::Zero(4, 2), Matrix::Zero(3, 2)};
  ones.Ubar.col(0).setConstant(1.5);
  ones.Vbar.col(0).setConstant(1.5);
  CHECK((build_truth(ones).array() == 2.25).all());

  Rng rng(17);
  TruthSpec two{2, 1.0, Matrix::Zero(6, 3), Matrix::Zero(5, 3)};
  two.Ubar.leftCols(2) = uniform_matrix(6, 2, -1, 1, rng);
  two.Vbar.leftCols(2) = uniform_matrix(5, 2, -1, 1, rng);
  CHECK(numerical_rank(build_truth(two)) == 2);

  TruthSpec big = two;
  big.Ubar(0, 0) = 1.5;
  CHECK_THROWS_AS(build_truth(big), ContractViolation);
  TruthSpec extra = two;
  extra.Ubar(0, 2) = 0.5;
  CHECK_THROWS_AS(build_truth(extra), ContractViolation);
}

TEST_CASE("factor prior draws have the configured shape") {
  Rng rng(18);
  FactorPriorConfig cfg{3, 2.0, 1.0, VarianceFamily::InverseGamma};
  const FactorState s = sample_factor_prior(cfg, 4, 5, rng);
  CHECK(s.L.rows() == 4);
  CHECK(s.R.rows() == 5);
  CHECK(s.gamma.size() == 3);
  CHECK((s.gamma.array() > 0.0).all());
}
