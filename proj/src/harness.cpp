#include "onebit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <set>
#include <thread>

namespace onebit {

GeneratedTruth generate_truth(int d1, int d2, int r, double B, Rng& rng) {
  require(d1 >= 1 && d2 >= 1, "dimensions must be positive");
  require(r >= 0 && r <= std::min(d1, d2), "truth rank must lie in [0, min(d1, d2)]");
  require(B > 0.0, "B must be positive");
  const int K = std::max(r, 1);
  GeneratedTruth t;
  t.spec.r = r;
  t.spec.B = B;
  t.spec.Ubar = Matrix::Zero(d1, K);
  t.spec.Vbar = Matrix::Zero(d2, K);
  std::uniform_real_distribution<double> u(-B, B);
  for (int k = 0; k < r; ++k) {
    for (int i = 0; i < d1; ++i) t.spec.Ubar(i, k) = u(rng);
    for (int j = 0; j < d2; ++j) t.spec.Vbar(j, k) = u(rng);
  }
  t.mstar = build_truth(t.spec);
  t.kappa = t.mstar.cwiseAbs().maxCoeff();
  return t;
}

SamplingDistribution generate_pi(int d1, int d2, const PiSpec& spec, Rng& rng) {
  require(d1 >= 1 && d2 >= 1, "dimensions must be positive");
  if (spec.kind == PiKind::Uniform || spec.strength == 1.0) {
    return SamplingDistribution::uniform(d1, d2);
  }
  require(spec.strength >= 1.0, "tilt strength must be >= 1");
  std::uniform_real_distribution<double> u(1.0, spec.strength);
  Matrix w(d1, d2);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d2; ++j) w(i, j) = u(rng);
  return SamplingDistribution(w / w.sum());
}

ObservationSet sample_observations(const Matrix& mstar, const SamplingDistribution& pi, long n,
                                   Rng& rng) {
  require(pi.rows() == mstar.rows() && pi.cols() == mstar.cols(),
          "sampling distribution shape differs from the truth");
  require(n >= 0, "n must be nonnegative");
  const int d2 = int(mstar.cols());
  std::vector<double> weights;
  weights.reserve(std::size_t(pi.probs().size()));
  for (Eigen::Index i = 0; i < mstar.rows(); ++i)
    for (Eigen::Index j = 0; j < mstar.cols(); ++j) weights.push_back(pi.probs()(i, j));
  std::discrete_distribution<int> omega(weights.begin(), weights.end());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Observation> obs;
  obs.reserve(std::size_t(n));
  for (long s = 0; s < n; ++s) {
    const int k = omega(rng);
    const int i = k / d2;
    const int j = k % d2;
    const int y = u(rng) < logistic(mstar(i, j)) ? 1 : -1;
    obs.push_back({i, j, y});
  }
  return ObservationSet(std::move(obs));
}

RunInputs generate_inputs(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  // The data stream is keyed separately from the chain stream (Rng(seed)).
  std::seed_seq seq{std::uint32_t(seed & 0xffffffffU), std::uint32_t(seed >> 32), 0x5eedU};
  Rng rng(seq);
  RunInputs in;
  in.truth = generate_truth(cfg.d1, cfg.d2, cfg.r, cfg.B, rng);
  in.pi = generate_pi(cfg.d1, cfg.d2, cfg.pi, rng);
  in.data = sample_observations(in.truth.mstar, in.pi, cfg.n, rng);
  return in;
}

Chain run_chain(const ExperimentConfig& cfg, const EntryCounts& counts, std::uint64_t seed) {
  const FractionalExponent alpha(cfg.alpha);
  if (cfg.prior.family == PriorFamily::Student) {
    return run_student_chain(counts, alpha, cfg.student_prior(), cfg.mala, seed, cfg.prior.kernel);
  }
  return run_factor_chain(counts, alpha, cfg.factor_prior(), cfg.mala, seed);
}

RunResult evaluate_run(const ExperimentConfig& cfg, const RunInputs& inputs, const Chain& chain,
                       std::uint64_t seed) {
  const Matrix& mstar = inputs.truth.mstar;
  const SamplingDistribution& pi = inputs.pi;
  RunResult res;
  res.config_digest = config_digest(cfg);
  res.seed = seed;
  res.n = cfg.n;
  res.d1 = cfg.d1;
  res.d2 = cfg.d2;
  res.r = cfg.r;
  res.alpha = cfg.alpha;
  res.prior = to_string(cfg.prior.family);
  res.accept_rate = chain.accept_rate;
  res.diagnostics = chain.diagnostics;

  const PosteriorSummary summary = posterior_mean(chain);
  res.frob_sq_mean_est = frobenius_sq_normalized(summary.mean_matrix, mstar);

  const auto hell = DivergenceKind::hellinger(Normalization::PaperNormalized);
  const auto renyi = DivergenceKind::renyi(cfg.alpha, Normalization::PaperNormalized);
  std::vector<double> frob, hel, ren;
  frob.reserve(chain.samples.size());
  hel.reserve(chain.samples.size());
  ren.reserve(chain.samples.size());
  for (const auto& s : chain.samples) {
    frob.push_back(frobenius_sq_normalized(s, mstar));
    hel.push_back(joint_divergence(s, mstar, pi, hell));
    ren.push_back(joint_divergence(s, mstar, pi, renyi));
  }
  res.post_avg_frob_sq = summarize_values(frob);
  res.post_avg_hellinger = summarize_values(hel);
  res.post_avg_renyi = summarize_values(ren);
  res.jensen_ok =
      res.frob_sq_mean_est <= res.post_avg_frob_sq.value + 3.0 * res.post_avg_frob_sq.mcse;

  if (cfg.prior.family == PriorFamily::Student) {
    res.epsilon_n = rate_student({cfg.n, cfg.d1, cfg.d2, numerical_rank(mstar), mstar.norm()});
  } else {
    res.epsilon_n = rate_factorized({cfg.n, cfg.d1, cfg.d2, cfg.r, cfg.prior.a, cfg.B, 1.0});
  }
  const double kappa = cfg.kappa ? *cfg.kappa : inputs.truth.kappa;
  res.constants = constants_report(cfg.alpha, kappa, pi);
  for (BoundSide side :
       {BoundSide::RenyiTheorem, BoundSide::HellingerCorollary, BoundSide::FrobeniusTheorem}) {
    res.thresholds[side] = concentration_threshold(res.epsilon_n, cfg.alpha, side,
                                                   res.constants.C1, res.constants.C_kappa);
  }
  res.prob_floor = res.epsilon_n > 0.0 ? 1.0 - 2.0 / (double(cfg.n) * res.epsilon_n)
                                       : -std::numeric_limits<double>::infinity();

  // Pointwise checks on up to 100 evenly spaced samples.
  const std::size_t total = chain.samples.size();
  const std::size_t m = std::min<std::size_t>(100, total);
  std::vector<std::size_t> picks;
  for (std::size_t k = 0; k < m; ++k) picks.push_back(k * total / m);
  double kappa_checked = inputs.truth.kappa;
  for (auto k : picks) kappa_checked = std::max(kappa_checked, chain.samples[k].cwiseAbs().maxCoeff());
  res.kappa_checked = kappa_checked;
  const double ck = C_kappa(kappa_checked);
  constexpr double kRel = 1e-12;
  for (auto k : picks) {
    const double lhs = frob[k];
    const double rhs = hel[k] / (pi.c1() * ck);
    if (lhs > rhs * (1.0 + kRel)) ++res.transfer_violations;
    if (cfg.alpha >= 0.5 && hel[k] > ren[k] * (1.0 + kRel)) ++res.sandwich_violations;
  }
  res.transfer_samples_checked = int(picks.size());
  return res;
}

RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed) {
  const RunInputs inputs = generate_inputs(cfg, seed);
  const EntryCounts counts = tally(inputs.data, cfg.d1, cfg.d2);
  const Chain chain = run_chain(cfg, counts, seed);
  return evaluate_run(cfg, inputs, chain, seed);
}

std::vector<BoundCheckResult> check_runs(const std::vector<RunResult>& runs, double alpha) {
  require(!runs.empty(), "bound checks need at least one run");
  std::vector<BoundCheckResult> out;
  const RunResult& first = runs.front();
  std::vector<double> renyi, hel, frob;
  for (const auto& r : runs) {
    renyi.push_back(r.post_avg_renyi.value);
    hel.push_back(r.post_avg_hellinger.value);
    frob.push_back(r.post_avg_frob_sq.value);
  }
  // Every replication has its own truth, hence its own eps_n and C_kappa. One
  // threshold serves the whole batch: the median eps_n and the smallest
  // C1 * C_kappa product.
  std::vector<double> eps;
  double c1ck = std::numeric_limits<double>::infinity();
  for (const auto& r : runs) {
    eps.push_back(r.epsilon_n);
    c1ck = std::min(c1ck, r.constants.C1 * r.constants.C_kappa);
  }
  const double e = median(eps);
  out.push_back(check_concentration(renyi, first.n, e, alpha, BoundSide::RenyiTheorem));
  out.push_back(check_concentration(hel, first.n, e, alpha, BoundSide::HellingerCorollary));
  out.push_back(
      check_concentration(frob, first.n, e, alpha, BoundSide::FrobeniusTheorem, c1ck, 1.0));
  return out;
}

ReplicatedResult run_replicated(const ExperimentConfig& cfg) {
  cfg.validate();
  const int reps = cfg.replications;
  std::vector<RunResult> results(static_cast<std::size_t>(reps));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int k = next++; k < reps; k = next++) {
      try {
        results[std::size_t(k)] = run_single(cfg, split_seed(cfg.master_seed, std::uint64_t(k)));
      } catch (...) {
        errors[std::size_t(k)] = std::current_exception();
      }
    }
  };
  const int nthreads = std::min(cfg.workers, reps);
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  ReplicatedResult out;
  out.runs = std::move(results);
  out.checks = check_runs(out.runs, cfg.alpha);
  return out;
}

double median(std::vector<double> v) {
  require(!v.empty(), "median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

SlopeEstimate fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "slope fit needs paired samples");
  require(x.size() >= 2, "slope fit needs at least two points");
  const std::size_t k = x.size();
  std::vector<double> lx(k), ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "log-log fit needs positive values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= double(k);
  my /= double(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  require(sxx > 0.0, "slope fit needs distinct x values");
  SlopeEstimate s;
  s.points = int(k);
  s.slope = sxy / sxx;
  s.intercept = my - s.slope * mx;
  if (k > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double e = ly[i] - s.intercept - s.slope * lx[i];
      rss += e * e;
    }
    s.stderr_ = std::sqrt(rss / double(k - 2) / sxx);
  }
  return s;
}

namespace {

GridPoint make_point(const std::string& axis, const std::vector<const RunResult*>& group) {
  GridPoint p;
  p.axis = axis;
  p.n = group.front()->n;
  p.r = group.front()->r;
  std::vector<double> pf, fm, ph, pr, eps;
  std::vector<RunResult> copies;
  for (const auto* r : group) {
    pf.push_back(r->post_avg_frob_sq.value);
    fm.push_back(r->frob_sq_mean_est);
    ph.push_back(r->post_avg_hellinger.value);
    pr.push_back(r->post_avg_renyi.value);
    eps.push_back(r->epsilon_n);
    copies.push_back(*r);
  }
  p.median_post_avg_frob_sq = median(pf);
  p.median_frob_sq_mean_est = median(fm);
  p.median_post_avg_hellinger = median(ph);
  p.median_post_avg_renyi = median(pr);
  p.epsilon_n = median(eps);
  p.checks = check_runs(copies, group.front()->alpha);
  return p;
}

}  // namespace

SweepReport summarize_sweep(std::vector<RunResult> rows, int base_r, long r_fixed_n) {
  SweepReport rep;
  rep.rows = std::move(rows);

  std::set<long> ns;
  for (const auto& r : rep.rows)
    if (r.r == base_r) ns.insert(r.n);
  std::vector<double> xs, pf, fm, ph, pr;
  for (long n : ns) {
    std::vector<const RunResult*> g;
    for (const auto& r : rep.rows)
      if (r.r == base_r && r.n == n) g.push_back(&r);
    GridPoint p = make_point("n", g);
    xs.push_back(double(n));
    pf.push_back(p.median_post_avg_frob_sq);
    fm.push_back(p.median_frob_sq_mean_est);
    ph.push_back(p.median_post_avg_hellinger);
    pr.push_back(p.median_post_avg_renyi);
    rep.points.push_back(std::move(p));
  }
  for (std::size_t k = 1; k < pf.size(); ++k)
    if (pf[k] > pf[k - 1]) ++rep.monotone_inversions;
  if (xs.size() >= 2) {
    rep.slope_estimates["post_avg_frob_sq_vs_n"] = fit_loglog(xs, pf);
    rep.slope_estimates["frob_sq_mean_est_vs_n"] = fit_loglog(xs, fm);
    rep.slope_estimates["post_avg_hellinger_vs_n"] = fit_loglog(xs, ph);
    rep.slope_estimates["post_avg_renyi_vs_n"] = fit_loglog(xs, pr);
  }

  std::set<int> rs;
  for (const auto& r : rep.rows)
    if (r.n == r_fixed_n) rs.insert(r.r);
  if (rs.size() > 1) {
    std::vector<double> rx, ry;
    for (int rr : rs) {
      std::vector<const RunResult*> g;
      for (const auto& r : rep.rows)
        if (r.n == r_fixed_n && r.r == rr) g.push_back(&r);
      GridPoint p = make_point("r", g);
      if (rr > 0) {
        rx.push_back(double(rr));
        ry.push_back(p.median_post_avg_frob_sq);
      }
      rep.points.push_back(std::move(p));
    }
    if (rx.size() >= 2) rep.slope_estimates["post_avg_frob_sq_vs_r"] = fit_loglog(rx, ry);
  }
  return rep;
}

SweepReport run_sweep(const ExperimentConfig& base) {
  base.validate();
  require(base.n_grid.size() >= 4, "the n grid needs at least 4 values");
  const auto [lo, hi] = std::minmax_element(base.n_grid.begin(), base.n_grid.end());
  require(double(*hi) >= 8.0 * double(*lo), "the n grid must span at least a factor of 8");
  std::set<long> distinct(base.n_grid.begin(), base.n_grid.end());
  require(distinct.size() == base.n_grid.size(), "the n grid must not repeat values");

  std::vector<RunResult> rows;
  for (long n : base.n_grid) {
    ExperimentConfig cfg = base;
    cfg.n = n;
    auto rep = run_replicated(cfg);
    for (auto& r : rep.runs) rows.push_back(std::move(r));
  }
  for (int r : base.r_grid) {
    if (r == base.r && distinct.count(base.r_fixed_n)) continue;
    ExperimentConfig cfg = base;
    cfg.n = base.r_fixed_n;
    cfg.r = r;
    auto rep = run_replicated(cfg);
    for (auto& row : rep.runs) rows.push_back(std::move(row));
  }
  return summarize_sweep(std::move(rows), base.r, base.r_fixed_n);
}

}  // namespace onebit
