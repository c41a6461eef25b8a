#pragma once

// Shared helpers for the unit and acceptance tests: random fixtures and
// central finite differences.

#include <cmath>
#include <functional>

#include "onebit/core_model.hpp"
#include "onebit/priors.hpp"

namespace onebit::testing {

inline Matrix uniform_matrix(int rows, int cols, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline ObservationSet random_observations(int d1, int d2, int n, Rng& rng) {
  std::uniform_int_distribution<int> ri(0, d1 - 1), rj(0, d2 - 1), ry(0, 1);
  ObservationSet data;
  for (int s = 0; s < n; ++s) data.add({ri(rng), rj(rng), ry(rng) ? 1 : -1});
  return data;
}

inline SamplingDistribution random_pi(int d1, int d2, double strength, Rng& rng) {
  Matrix w = uniform_matrix(d1, d2, 1.0, strength, rng);
  return SamplingDistribution(w / w.sum());
}

/// Central differences of f at x with step h, entry by entry.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                               double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  Matrix xp = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double v = x(i, j);
      xp(i, j) = v + h;
      const double up = f(xp);
      xp(i, j) = v - h;
      const double dn = f(xp);
      xp(i, j) = v;
      g(i, j) = (up - dn) / (2.0 * h);
    }
  }
  return g;
}

/// ||a - b|| / max(||b||, floor): normwise relative error.
inline double relative_error(const Matrix& a, const Matrix& b, double floor = 1e-8) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

inline FactorState random_factor_state(int d1, int d2, int K, Rng& rng) {
  FactorState s;
  s.L = uniform_matrix(d1, K, -1.5, 1.5, rng);
  s.R = uniform_matrix(d2, K, -1.5, 1.5, rng);
  s.gamma = uniform_matrix(K, 1, 0.3, 2.5, rng).col(0);
  return s;
}

}  // namespace onebit::testing
