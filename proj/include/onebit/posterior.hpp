#pragma once

// Monte Carlo summaries of a finished chain: the posterior-mean estimator
// and posterior expectations of scalar functionals, each with batch-means
// standard errors.

#include <functional>
#include <span>

#include "onebit/chains.hpp"

namespace onebit {

inline constexpr int kDefaultBatches = 20;

/// Batch-means Monte Carlo standard error of the mean of xs. Uses
/// min(n_batches, xs.size()) equal batches; leading samples that do not fill
/// a batch are left out of the variance estimate only.
double batch_means_mcse(std::span<const double> xs, int n_batches = kDefaultBatches);

struct PosteriorSummary {
  Matrix mean_matrix;
  int n_samples_used = 0;
  Matrix mc_standard_error;
};

PosteriorSummary posterior_mean(const Chain& chain, int n_batches = kDefaultBatches);

struct FunctionalEstimate {
  double value = 0.0;
  double mcse = 0.0;
};

using MatrixFunctional = std::function<double(const Matrix&)>;

FunctionalEstimate posterior_functional(const Chain& chain, const MatrixFunctional& g,
                                        int n_batches = kDefaultBatches);

/// Same estimate from precomputed per-sample values.
FunctionalEstimate summarize_values(std::span<const double> values,
                                    int n_batches = kDefaultBatches);

}  // namespace onebit
