#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "doctest.h"
#include "onebit/chains.hpp"
#include "onebit/harness.hpp"
#include "onebit/posterior.hpp"
#include "support.hpp"

using namespace onebit;
using namespace onebit::testing;

namespace {

MalaConfig steps(int n, int burn, int thin = 1) {
  MalaConfig c;
  c.n_steps = n;
  c.burn_in = burn;
  c.thin = thin;
  return c;
}

EntryCounts empty_counts(int d1, int d2) { return tally(ObservationSet{}, d1, d2); }

std::vector<double> entry_trace(const Chain& c, int i = 0, int j = 0) {
  std::vector<double> v;
  for (const auto& m : c.samples) v.push_back(m(i, j));
  return v;
}

}  // namespace

TEST_CASE("MALA proposal equal to the current state is always accepted") {
  const LogTargetFn target = [](const Matrix& x, Matrix* g) {
    if (g) *g = -x;
    return -0.5 * x.squaredNorm();
  };
  Rng rng(1);
  const MalaPoint p = evaluate_point(target, uniform_matrix(2, 3, -1, 1, rng));
  const double h = 0.3;
  const Matrix xi = -(h * p.grad) / std::sqrt(2.0 * h);
  const MalaStepResult r =
      mala_transition(p, target, h, IdentityPreconditioner{}, xi, std::log(0.999999));
  CHECK(r.accept_prob == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.accepted);
  CHECK((r.next.x - p.x).norm() <= 1e-15);
}

TEST_CASE("MALA rejects proposals with non-finite density") {
  const LogTargetFn target = [](const Matrix& x, Matrix* g) {
    if (g) *g = -x;
    if (x(0, 0) > 0.5) return -std::numeric_limits<double>::infinity();
    return -0.5 * x.squaredNorm();
  };
  const MalaPoint p = evaluate_point(target, Matrix::Zero(1, 1));
  const Matrix xi = Matrix::Constant(1, 1, 10.0);
  const MalaStepResult r = mala_transition(p, target, 0.1, IdentityPreconditioner{}, xi, -1e-9);
  CHECK_FALSE(r.accepted);
  CHECK(r.nonfinite);
  CHECK(r.next.x(0, 0) == 0.0);
}

TEST_CASE("spec-form mala_step returns the state and the acceptance flag") {
  Rng rng(2);
  Matrix x = Matrix::Zero(2, 2);
  int accepted = 0;
  for (int k = 0; k < 200; ++k) {
    auto [next, acc] = mala_step(
        x, [](const Matrix& m) { return -0.5 * m.squaredNorm(); },
        [](const Matrix& m) { return Matrix(-m); }, 0.5, rng);
    x = next;
    accepted += acc;
  }
  CHECK(accepted > 100);
  CHECK(x.allFinite());
}

TEST_CASE("MALA transition counts satisfy detailed balance on a 1-D target") {
  // 1x1 Student posterior with two observations, binned on a fine grid. For
  // a stationary reversible chain the bin-to-bin transition counts N_ab and
  // N_ba have equal expectations.
  ObservationSet d;
  d.add({0, 0, 1});
  d.add({0, 0, -1});
  d.add({0, 0, 1});
  const EntryCounts counts = tally(d, 1, 1);
  const LogTargetFn target =
      student_posterior_target(counts, FractionalExponent(0.9), StudentPriorConfig{1.0});
  Rng rng(3);
  MalaPoint p = evaluate_point(target, Matrix::Zero(1, 1));
  const IdentityPreconditioner id;
  for (int k = 0; k < 2000; ++k) p = mala_step(p, target, 0.8, id, rng).next;
  auto bin = [](double x) { return int(std::floor(std::clamp(x, -3.0, 2.999) / 0.5)); };
  std::map<std::pair<int, int>, long> n;
  for (int k = 0; k < 400000; ++k) {
    const int from = bin(p.x(0, 0));
    p = mala_step(p, target, 0.8, id, rng).next;
    const int to = bin(p.x(0, 0));
    if (from != to) n[{from, to}]++;
  }
  int tested = 0;
  for (const auto& [key, c] : n) {
    if (key.first > key.second) continue;
    const long back = n.count({key.second, key.first}) ? n.at({key.second, key.first}) : 0;
    if (c + back < 200) continue;
    ++tested;
    CHECK(std::abs(double(c - back)) <= 4.0 * std::sqrt(double(c + back)));
  }
  CHECK(tested >= 10);
}

TEST_CASE("dual averaging drives acceptance toward the target") {
  DualAveraging da(1.0, 0.574);
  // acceptance falls with step size: p = exp(-step)
  double step = da.current();
  for (int k = 0; k < 5000; ++k) step = da.update(std::exp(-step));
  CHECK(std::exp(-da.final_step()) == doctest::Approx(0.574).epsilon(0.02));
}

TEST_CASE("MalaConfig validation") {
  MalaConfig c;
  c.burn_in = c.n_steps;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
  c = MalaConfig{};
  c.step_size = 0.0;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
  c = MalaConfig{};
  c.thin = 0;
  CHECK_THROWS_AS(c.validate(), ContractViolation);
}

TEST_CASE("prior-only 1x1 Student chain is centred at zero") {
  for (StudentKernel k : {StudentKernel::ScaleMixture, StudentKernel::FullMala}) {
    const Chain c = run_student_chain(empty_counts(1, 1), FractionalExponent(0.5),
                                      StudentPriorConfig{1.0}, steps(200000, 20000), 4, k);
    const auto v = entry_trace(c);
    const FunctionalEstimate e = summarize_values(v);
    CHECK(std::abs(e.value) <= 3 * e.mcse);
  }
}

TEST_CASE("prior-only Student chain reproduces the prior moments") {
  const double tau = 0.5;
  const Chain c = run_student_chain(empty_counts(2, 2), FractionalExponent(0.5),
                                    StudentPriorConfig{tau}, steps(200000, 20000, 2), 5);
  const PosteriorSummary s = posterior_mean(c);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(s.mean_matrix(i, j)) <= 3 * s.mc_standard_error(i, j));
  const FunctionalEstimate f =
      posterior_functional(c, [](const Matrix& m) { return m.squaredNorm(); });
  CHECK(f.value <= 4 * tau * tau + 3 * f.mcse);
}

TEST_CASE("vanishing step without adaptation accepts almost everything") {
  MalaConfig m = steps(3000, 500);
  m.adapt = false;
  m.step_size = 1e-9;
  Rng rng(6);
  const ObservationSet d = random_observations(3, 3, 50, rng);
  const Chain c = run_student_chain(tally(d, 3, 3), FractionalExponent(0.9),
                                    StudentPriorConfig{1.0}, m, 6, StudentKernel::FullMala);
  CHECK(c.accept_rate > 0.999);
}

TEST_CASE("chains are reproducible from their seed") {
  Rng rng(7);
  const EntryCounts d = tally(random_observations(3, 4, 80, rng), 3, 4);
  const FractionalExponent al(0.8);
  const Chain a = run_student_chain(d, al, StudentPriorConfig{0.5}, steps(2000, 500, 5), 99);
  const Chain b = run_student_chain(d, al, StudentPriorConfig{0.5}, steps(2000, 500, 5), 99);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) CHECK(a.samples[k] == b.samples[k]);

  const FactorPriorConfig fc{2, 1.0, 1.0, VarianceFamily::Gamma};
  const Chain f = run_factor_chain(d, al, fc, steps(2000, 500, 5), 42);
  const Chain g = run_factor_chain(d, al, fc, steps(2000, 500, 5), 42);
  for (std::size_t k = 0; k < f.samples.size(); ++k) CHECK(f.samples[k] == g.samples[k]);
  CHECK(a.target_descriptor == b.target_descriptor);
}

TEST_CASE("Student chain beats the zero matrix on a 2x2 rank-1 truth") {
  int better = 0;
  for (int rep = 0; rep < 20; ++rep) {
    Rng rng(1000 + rep);
    // B = 2: a near-zero truth sits inside the sampling noise and nothing beats 0 there
    const GeneratedTruth t = generate_truth(2, 2, 1, 2.0, rng);
    const ObservationSet d =
        sample_observations(t.mstar, SamplingDistribution::uniform(2, 2), 2000, rng);
    const Chain c = run_student_chain(tally(d, 2, 2), FractionalExponent(0.99),
                                      StudentPriorConfig{0.5}, steps(3000, 600, 2), rep);
    if ((posterior_mean(c).mean_matrix - t.mstar).norm() < t.mstar.norm()) ++better;
  }
  CHECK(better >= 19);
}

TEST_CASE("prior-only factor chain matches the inverse-gamma moments") {
  const FactorPriorConfig cfg{1, 3.0, 1.0, VarianceFamily::InverseGamma};
  const Chain c = run_factor_chain(empty_counts(1, 1), FractionalExponent(0.5), cfg,
                                   steps(110000, 10000), 8);
  std::vector<double> g;
  for (const auto& s : c.factor_samples) g.push_back(s.gamma(0));
  const FunctionalEstimate e = summarize_values(g);
  CHECK(std::abs(e.value - 0.5) <= 3 * e.mcse);
}

TEST_CASE("factor sweep commutes with a column permutation") {
  Rng rng(9);
  const EntryCounts d = tally(random_observations(4, 3, 60, rng), 4, 3);
  const FractionalExponent al(0.9);
  for (VarianceFamily fam : {VarianceFamily::InverseGamma, VarianceFamily::Gamma}) {
    const FactorPriorConfig cfg{3, 1.0, 1.0, fam};
    const std::vector<int> perm{2, 0, 1};
    auto permute_cols = [&](const Matrix& m) {
      Matrix out(m.rows(), m.cols());
      for (int k = 0; k < 3; ++k) out.col(k) = m.col(perm[k]);
      return out;
    };
    auto permute_vec = [&](const Vector& v) {
      Vector out(v.size());
      for (int k = 0; k < 3; ++k) out(k) = v(perm[k]);
      return out;
    };
    FactorState a = sample_factor_prior(cfg, 4, 3, rng);
    FactorState b{permute_cols(a.L), permute_cols(a.R), permute_vec(a.gamma)};
    const FactorStepSizes st{0.05, 0.05, 0.05};
    for (int it = 0; it < 200; ++it) {
      FactorSweepNoise na = draw_factor_noise(a, cfg, rng);
      FactorSweepNoise nb = na;
      nb.xi_L = permute_cols(na.xi_L);
      nb.xi_R = permute_cols(na.xi_R);
      if (fam == VarianceFamily::InverseGamma) {
        nb.gamma_variates = permute_vec(na.gamma_variates);
      } else {
        nb.xi_theta = permute_vec(na.xi_theta.col(0));
      }
      a = factor_sweep(a, d, al, cfg, st, na).state;
      b = factor_sweep(b, d, al, cfg, st, nb).state;
      CHECK((a.induced() - b.induced()).norm() <= 1e-10 * (1.0 + a.induced().norm()));
    }
  }
}

TEST_CASE("factor chain beats the zero matrix on a 4x4 rank-1 truth") {
  for (VarianceFamily fam : {VarianceFamily::InverseGamma, VarianceFamily::Gamma}) {
    int better = 0;
    for (int rep = 0; rep < 20; ++rep) {
      Rng rng(2000 + rep);
      const GeneratedTruth t = generate_truth(4, 4, 1, 1.0, rng);
      const ObservationSet d =
          sample_observations(t.mstar, SamplingDistribution::uniform(4, 4), 4000, rng);
      const FactorPriorConfig cfg{2, 1.0, 1.0, fam};
      const Chain c = run_factor_chain(tally(d, 4, 4), FractionalExponent(0.99), cfg,
                                       steps(3000, 600, 2), rep);
      if ((posterior_mean(c).mean_matrix - t.mstar).norm() < t.mstar.norm()) ++better;
    }
    CHECK(better >= 19);
  }
}

TEST_CASE("posterior summaries of degenerate chains") {
  Chain c;
  c.d1 = 2;
  c.d2 = 2;
  CHECK_THROWS_AS(posterior_mean(c), ContractViolation);
  const Matrix m0 = Matrix::Constant(2, 2, 1.5);
  for (int k = 0; k < 40; ++k) c.samples.push_back(m0);
  const PosteriorSummary s = posterior_mean(c);
  CHECK(s.mean_matrix == m0);
  CHECK(s.mc_standard_error.norm() == 0.0);
  CHECK(s.n_samples_used == 40);
  const FunctionalEstimate f = posterior_functional(c, [](const Matrix&) { return 3.0; });
  CHECK(f.value == 3.0);
  CHECK(f.mcse == 0.0);

  Chain alt;
  alt.d1 = 2;
  alt.d2 = 2;
  for (int k = 0; k < 40; ++k) alt.samples.push_back(k % 2 ? m0 : Matrix(-m0));
  CHECK(posterior_mean(alt).mean_matrix.norm() == 0.0);
}

TEST_CASE("thinning then averaging equals averaging the thinned chain") {
  Rng rng(10);
  const EntryCounts d = tally(random_observations(3, 3, 40, rng), 3, 3);
  const Chain full = run_student_chain(d, FractionalExponent(0.9), StudentPriorConfig{1.0},
                                       steps(3000, 1000, 1), 11);
  const Chain thin = run_student_chain(d, FractionalExponent(0.9), StudentPriorConfig{1.0},
                                       steps(3000, 1000, 4), 11);
  Matrix acc = Matrix::Zero(3, 3);
  int count = 0;
  for (std::size_t k = 0; k < full.samples.size(); k += 4, ++count) acc += full.samples[k];
  REQUIRE(count == int(thin.samples.size()));
  CHECK((acc / count - posterior_mean(thin).mean_matrix).norm() <= 1e-12);
}

TEST_CASE("batch means standard error") {
  std::vector<double> v(1000, 2.0);
  CHECK(batch_means_mcse(v) == 0.0);
  std::vector<double> iid;
  Rng rng(12);
  std::normal_distribution<double> z;
  for (int k = 0; k < 200000; ++k) iid.push_back(z(rng));
  const double se = batch_means_mcse(iid);
  CHECK(se == doctest::Approx(1.0 / std::sqrt(200000.0)).epsilon(0.5));
  CHECK(batch_means_mcse(std::vector<double>{1.0}) == 0.0);
}
