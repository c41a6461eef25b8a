#include "onebit/chains.hpp"

#include "onebit/digest.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace onebit {

void MalaConfig::validate() const {
  require(step_size > 0.0 && std::isfinite(step_size), "MALA step size must be positive");
  require(n_steps >= 1, "MALA needs at least one step");
  require(burn_in >= 0 && burn_in < n_steps, "burn-in must lie in [0, n_steps)");
  require(thin >= 1, "thinning must be at least 1");
}

std::string data_digest(const EntryCounts& counts) {
  Fnv1a h;
  h.u64(std::uint64_t(counts.rows()));
  h.u64(std::uint64_t(counts.cols()));
  for (Eigen::Index k = 0; k < counts.positive.size(); ++k) {
    h.u64(std::uint64_t(counts.positive(k)));
    h.u64(std::uint64_t(counts.negative(k)));
  }
  return h.hex();
}

namespace {

double log_uniform(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = u(rng);
  while (v <= 0.0) v = u(rng);
  return std::log(v);
}

// Step-size bookkeeping for one MALA block.
class BlockTracker {
 public:
  BlockTracker(std::string name, const MalaConfig& cfg)
      : cfg_(cfg), adapt_(cfg.step_size), step_(cfg.step_size) {
    diag_.name = std::move(name);
  }

  double step() const { return step_; }

  void record(int iteration, const MalaStepResult& res) {
    if (res.nonfinite) ++diag_.nonfinite_proposals;
    if (iteration < cfg_.burn_in) {
      if (cfg_.adapt && !cfg_.unadjusted) {
        step_ = adapt_.update(res.accept_prob);
        if (iteration == cfg_.burn_in - 1) step_ = adapt_.final_step();
      }
      if (iteration % cfg_.thin == 0) diag_.step_trajectory.push_back(step_);
    } else {
      ++post_steps_;
      if (res.accepted) ++post_accepts_;
    }
  }

  BlockDiagnostics finish() const {
    BlockDiagnostics d = diag_;
    d.accept_rate = post_steps_ > 0 ? double(post_accepts_) / double(post_steps_) : 0.0;
    d.final_step = step_;
    return d;
  }

 private:
  const MalaConfig& cfg_;
  DualAveraging adapt_;
  double step_;
  BlockDiagnostics diag_;
  long post_steps_ = 0;
  long post_accepts_ = 0;
};

ChainDiagnostics collect(const std::vector<const BlockTracker*>& blocks, int steps) {
  ChainDiagnostics d;
  d.steps_run = steps;
  for (const auto* b : blocks) d.blocks.push_back(b->finish());
  return d;
}

double mean_accept(const ChainDiagnostics& d) {
  if (d.blocks.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& b : d.blocks) acc += b.accept_rate;
  return acc / double(d.blocks.size());
}

bool keep_sample(int iteration, const MalaConfig& cfg) {
  return iteration >= cfg.burn_in && (iteration - cfg.burn_in) % cfg.thin == 0;
}

}  // namespace

LogTargetFn student_posterior_target(const EntryCounts& data, FractionalExponent alpha,
                                     const StudentPriorConfig& cfg) {
  cfg.validate();
  return [&data, alpha, cfg](const Matrix& m, Matrix* grad) {
    if (grad) {
      *grad = frac_log_likelihood_grad(m, data, alpha) + student_log_prior_grad(m, cfg);
    }
    return frac_log_likelihood(m, data, alpha) + student_log_prior(m, cfg);
  };
}

Matrix student_scale_conditional_draw(const Matrix& m, const StudentPriorConfig& cfg,
                                      Rng& rng) {
  cfg.validate();
  const Eigen::Index d1 = m.rows();
  const double dof = double(m.rows() + m.cols() + 2);
  Matrix gram = Matrix::Identity(d1, d1) * (cfg.tau * cfg.tau);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(m);
  Eigen::LLT<Matrix> llt(gram.selfadjointView<Eigen::Lower>());
  require(llt.info() == Eigen::Success, "scale conditional Gram matrix is not positive definite");
  // Scale G^{-1} = C C^T with C = L_G^{-T}; S = C A A^T C^T.
  const Matrix a = bartlett_factor(int(d1), dof, rng);
  const Matrix c_a = llt.matrixU().solve(a);
  return c_a * c_a.transpose();
}

LogTargetFn student_conditional_target(const EntryCounts& data, FractionalExponent alpha,
                                       const Matrix& row_precision) {
  return [&data, alpha, row_precision](const Matrix& m, Matrix* grad) {
    const Matrix sm = row_precision * m;
    if (grad) *grad = frac_log_likelihood_grad(m, data, alpha) - sm;
    return frac_log_likelihood(m, data, alpha) - 0.5 * (m.array() * sm.array()).sum();
  };
}

Chain run_student_chain(const EntryCounts& data, FractionalExponent alpha,
                        const StudentPriorConfig& cfg, const MalaConfig& mala,
                        std::uint64_t seed, StudentKernel kernel) {
  cfg.validate();
  mala.validate();
  const int d1 = data.rows();
  const int d2 = data.cols();
  Rng rng(seed);

  Chain chain;
  chain.d1 = d1;
  chain.d2 = d2;
  chain.seed = seed;
  {
    std::ostringstream desc;
    desc << "student(tau=" << cfg.tau << ")"
         << (kernel == StudentKernel::FullMala ? "/full-mala" : "/scale-mixture")
         << ";alpha=" << alpha.value() << ";data=" << data_digest(data);
    chain.target_descriptor = desc.str();
  }

  BlockTracker tracker("M", mala);
  const Matrix curvature = 0.25 * alpha.value() * (data.positive + data.negative);
  const LogTargetFn full_target = student_posterior_target(data, alpha, cfg);
  const IdentityPreconditioner identity;

  MalaPoint point = evaluate_point(full_target, Matrix::Zero(d1, d2));
  for (int it = 0; it < mala.n_steps; ++it) {
    MalaStepResult res;
    if (kernel == StudentKernel::FullMala) {
      res = mala_step(point, full_target, tracker.step(), identity, rng, mala.unadjusted);
    } else {
      const Matrix s = student_scale_conditional_draw(point.x, cfg, rng);
      std::vector<Matrix> blocks(d2);
      for (int j = 0; j < d2; ++j) {
        blocks[j] = s;
        blocks[j].diagonal() += curvature.col(j);
      }
      const ColumnPreconditioner precond(blocks);
      const LogTargetFn target = student_conditional_target(data, alpha, s);
      const MalaPoint local = evaluate_point(target, point.x);
      res = mala_step(local, target, tracker.step(), precond, rng, mala.unadjusted);
    }
    tracker.record(it, res);
    point = std::move(res.next);
    if (!point.x.allFinite()) {
      throw ChainDiverged("Student chain reached a non-finite state at step " +
                              std::to_string(it),
                          collect({&tracker}, it + 1));
    }
    if (keep_sample(it, mala)) chain.samples.push_back(point.x);
  }
  chain.diagnostics = collect({&tracker}, mala.n_steps);
  chain.accept_rate = mean_accept(chain.diagnostics);
  return chain;
}

// --- factorization prior ---------------------------------------------------

namespace {

double theta_log_target(const Matrix& theta, const FactorState& s, const FactorPriorConfig& cfg,
                        Matrix* grad) {
  const double d = double(s.L.rows() + s.R.rows());
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  double acc = 0.0;
  for (int k = 0; k < cfg.K; ++k) {
    const double t = theta(k, 0);
    const double g = std::exp(t);
    if (!(g > 0.0) || !std::isfinite(g)) {
      return -std::numeric_limits<double>::infinity();
    }
    const double sq = s.L.col(k).squaredNorm() + s.R.col(k).squaredNorm();
    acc += variance_log_density(g, cfg) + t - 0.5 * d * (log_two_pi + t) - 0.5 * sq / g;
    if (grad) {
      const double hyper = cfg.family == VarianceFamily::Gamma ? cfg.a - g / cfg.b
                                                               : -cfg.a + cfg.b / g;
      (*grad)(k, 0) = hyper - 0.5 * d + 0.5 * sq / g;
    }
  }
  return acc;
}

}  // namespace

double factor_posterior_log_target(const FactorState& state, const EntryCounts& data,
                                   FractionalExponent alpha, const FactorPriorConfig& cfg) {
  return frac_log_likelihood(state.induced(), data, alpha) +
         factor_log_prior_logspace(state, cfg);
}

FactorPriorGradient factor_posterior_log_target_grad(const FactorState& state,
                                                     const EntryCounts& data,
                                                     FractionalExponent alpha,
                                                     const FactorPriorConfig& cfg) {
  FactorPriorGradient g = factor_log_prior_grad(state, cfg);
  const Matrix lik = frac_log_likelihood_grad(state.induced(), data, alpha);
  g.dL += lik * state.R;
  g.dR += lik.transpose() * state.L;
  return g;
}

FactorSweepNoise draw_factor_noise(const FactorState& state, const FactorPriorConfig& cfg,
                                   Rng& rng) {
  FactorSweepNoise n;
  n.xi_L = standard_normal(state.L.rows(), state.L.cols(), rng);
  n.log_u_L = log_uniform(rng);
  n.xi_R = standard_normal(state.R.rows(), state.R.cols(), rng);
  n.log_u_R = log_uniform(rng);
  if (cfg.family == VarianceFamily::InverseGamma) {
    n.gamma_variates.resize(cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
      std::gamma_distribution<double> g(gamma_conditional(state, cfg, k).shape, 1.0);
      n.gamma_variates(k) = g(rng);
    }
  } else {
    n.xi_theta = standard_normal(cfg.K, 1, rng);
    n.log_u_theta = log_uniform(rng);
  }
  return n;
}

FactorSweepResult factor_sweep(const FactorState& state, const EntryCounts& data,
                               FractionalExponent alpha, const FactorPriorConfig& cfg,
                               const FactorStepSizes& steps, const FactorSweepNoise& noise,
                               bool unadjusted) {
  FactorSweepResult out;
  FactorState s = state;
  const double a = alpha.value();
  const Matrix counts = data.positive + data.negative;
  const Vector inv_gamma = s.gamma.cwiseInverse();

  // L | R, gamma
  {
    const Matrix r = s.R;
    const LogTargetFn target = [&](const Matrix& l, Matrix* grad) {
      const Matrix m = l * r.transpose();
      if (grad) {
        *grad = frac_log_likelihood_grad(m, data, alpha) * r - l * inv_gamma.asDiagonal();
      }
      return frac_log_likelihood(m, data, alpha) -
             0.5 * (l.array().square().matrix() * inv_gamma).sum();
    };
    Matrix prec = (0.25 * a) * counts * r.array().square().matrix();
    prec.rowwise() += inv_gamma.transpose();
    const DiagonalPreconditioner precond(prec);
    out.L = mala_transition(evaluate_point(target, s.L), target, steps.L, precond, noise.xi_L,
                            noise.log_u_L, unadjusted);
    s.L = out.L.next.x;
  }
  // R | L, gamma
  {
    const Matrix l = s.L;
    const LogTargetFn target = [&](const Matrix& r, Matrix* grad) {
      const Matrix m = l * r.transpose();
      if (grad) {
        *grad = frac_log_likelihood_grad(m, data, alpha).transpose() * l -
                r * inv_gamma.asDiagonal();
      }
      return frac_log_likelihood(m, data, alpha) -
             0.5 * (r.array().square().matrix() * inv_gamma).sum();
    };
    Matrix prec = (0.25 * a) * counts.transpose() * l.array().square().matrix();
    prec.rowwise() += inv_gamma.transpose();
    const DiagonalPreconditioner precond(prec);
    out.R = mala_transition(evaluate_point(target, s.R), target, steps.R, precond, noise.xi_R,
                            noise.log_u_R, unadjusted);
    s.R = out.R.next.x;
  }
  // gamma | L, R
  if (cfg.family == VarianceFamily::InverseGamma) {
    s.gamma = gamma_conditional_from_variates(s, cfg, noise.gamma_variates);
    out.log_gamma.accepted = true;
    out.log_gamma.accept_prob = 1.0;
  } else {
    const FactorState fixed = s;
    const LogTargetFn target = [&](const Matrix& theta, Matrix* grad) {
      return theta_log_target(theta, fixed, cfg, grad);
    };
    const Matrix theta = s.gamma.array().log().matrix();
    out.log_gamma = mala_transition(evaluate_point(target, theta), target, steps.log_gamma,
                                    IdentityPreconditioner{}, noise.xi_theta, noise.log_u_theta,
                                    unadjusted);
    s.gamma = out.log_gamma.next.x.col(0).array().exp().matrix();
  }
  out.state = std::move(s);
  return out;
}

Chain run_factor_chain(const EntryCounts& data, FractionalExponent alpha,
                       const FactorPriorConfig& cfg, const MalaConfig& mala, std::uint64_t seed) {
  cfg.validate();
  mala.validate();
  Rng rng(seed);
  Chain chain;
  chain.d1 = data.rows();
  chain.d2 = data.cols();
  chain.seed = seed;
  {
    std::ostringstream desc;
    desc << "factor(" << (cfg.family == VarianceFamily::Gamma ? "gamma" : "inverse-gamma")
         << ",K=" << cfg.K << ",a=" << cfg.a << ",b=" << cfg.b << ");alpha=" << alpha.value()
         << ";data=" << data_digest(data);
    chain.target_descriptor = desc.str();
  }

  FactorState state = sample_factor_prior(cfg, chain.d1, chain.d2, rng);
  BlockTracker track_l("L", mala);
  BlockTracker track_r("R", mala);
  BlockTracker track_g("log_gamma", mala);
  const bool gibbs_gamma = cfg.family == VarianceFamily::InverseGamma;
  auto blocks = [&]() {
    std::vector<const BlockTracker*> b{&track_l, &track_r};
    if (!gibbs_gamma) b.push_back(&track_g);
    return b;
  };

  for (int it = 0; it < mala.n_steps; ++it) {
    const FactorSweepNoise noise = draw_factor_noise(state, cfg, rng);
    const FactorStepSizes steps{track_l.step(), track_r.step(), track_g.step()};
    FactorSweepResult res = factor_sweep(state, data, alpha, cfg, steps, noise, mala.unadjusted);
    track_l.record(it, res.L);
    track_r.record(it, res.R);
    if (!gibbs_gamma) track_g.record(it, res.log_gamma);
    state = std::move(res.state);
    if (!state.L.allFinite() || !state.R.allFinite() || !state.gamma.allFinite() ||
        !(state.gamma.array() > 0.0).all()) {
      throw ChainDiverged("factor chain reached a non-finite state at step " +
                              std::to_string(it),
                          collect(blocks(), it + 1));
    }
    if (keep_sample(it, mala)) {
      chain.samples.push_back(state.induced());
      chain.factor_samples.push_back(state);
    }
  }
  chain.diagnostics = collect(blocks(), mala.n_steps);
  chain.accept_rate = mean_accept(chain.diagnostics);
  return chain;
}

}  // namespace onebit
