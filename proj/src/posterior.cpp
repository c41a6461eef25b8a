#include "onebit/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace onebit {

double batch_means_mcse(std::span<const double> xs, int n_batches) {
  require(!xs.empty(), "standard error needs at least one sample");
  require(n_batches >= 1, "batch count must be positive");
  const std::size_t n = xs.size();
  const std::size_t nb = std::min<std::size_t>(std::size_t(n_batches), n);
  if (nb < 2) return 0.0;
  const std::size_t size = n / nb;
  const std::size_t skip = n - nb * size;
  std::vector<double> means(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < size; ++k) acc += xs[skip + b * size + k];
    means[b] = acc / double(size);
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= double(nb);
  double var = 0.0;
  for (double m : means) var += (m - grand) * (m - grand);
  var /= double(nb - 1);
  return std::sqrt(var / double(nb));
}

FunctionalEstimate summarize_values(std::span<const double> values, int n_batches) {
  require(!values.empty(), "posterior summary needs post-burn-in samples");
  double acc = 0.0;
  for (double v : values) acc += v;
  return {acc / double(values.size()), batch_means_mcse(values, n_batches)};
}

PosteriorSummary posterior_mean(const Chain& chain, int n_batches) {
  require(!chain.samples.empty(), "posterior mean needs post-burn-in samples");
  const auto rows = chain.samples.front().rows();
  const auto cols = chain.samples.front().cols();
  PosteriorSummary out;
  out.n_samples_used = int(chain.samples.size());
  out.mean_matrix = Matrix::Zero(rows, cols);
  for (const auto& s : chain.samples) out.mean_matrix += s;
  out.mean_matrix /= double(chain.samples.size());

  out.mc_standard_error.resize(rows, cols);
  std::vector<double> trace(chain.samples.size());
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (std::size_t t = 0; t < chain.samples.size(); ++t) trace[t] = chain.samples[t](i, j);
      out.mc_standard_error(i, j) = batch_means_mcse(trace, n_batches);
    }
  }
  return out;
}

FunctionalEstimate posterior_functional(const Chain& chain, const MatrixFunctional& g,
                                        int n_batches) {
  require(!chain.samples.empty(), "posterior functional needs post-burn-in samples");
  std::vector<double> values;
  values.reserve(chain.samples.size());
  for (const auto& s : chain.samples) values.push_back(g(s));
  return summarize_values(values, n_batches);
}

}  // namespace onebit
