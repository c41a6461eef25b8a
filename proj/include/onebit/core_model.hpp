#pragma once

// Logistic 1-bit observation model: observation data, the entry sampling
// law, and the fractional (tempered) log-likelihood with its gradient.

#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace onebit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Raised when a caller breaks a documented precondition.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation is not defined for the given configuration.
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

/// Checks that every entry of m is finite.
bool all_finite(const Matrix& m);

/// f(x) = e^x / (1 + e^x), evaluated without overflow for either sign of x.
double logistic(double x);

/// log f(x) = -log(1 + e^{-x}), stable for large |x|.
double log_logistic(double x);

/// Exponent of the fractional posterior; always strictly inside (0, 1).
class FractionalExponent {
 public:
  explicit FractionalExponent(double alpha);
  double value() const { return alpha_; }

 private:
  double alpha_;
};

/// One observed entry. Indices are 0-based; the 1-based file format is
/// converted once on ingestion (see data_io.hpp).
struct Observation {
  int i = 0;
  int j = 0;
  int y = 1;  // +1 or -1

  bool operator==(const Observation&) const = default;
};

/// Observations in draw order. Repeated entries are kept: the model samples
/// indices with replacement.
class ObservationSet {
 public:
  ObservationSet() = default;
  explicit ObservationSet(std::vector<Observation> obs);

  void add(Observation o);
  std::size_t size() const { return obs_.size(); }
  bool empty() const { return obs_.empty(); }
  const std::vector<Observation>& observations() const { return obs_; }
  const Observation& operator[](std::size_t k) const { return obs_[k]; }

  /// Concatenation, used for additivity checks and data merging.
  ObservationSet merged(const ObservationSet& other) const;

 private:
  std::vector<Observation> obs_;
};

/// Per-entry label counts. The likelihood depends on the data only through
/// these, so samplers tally once and evaluate in O(d1 d2).
struct EntryCounts {
  Matrix positive;  // number of y = +1 at (i, j)
  Matrix negative;  // number of y = -1 at (i, j)

  int rows() const { return static_cast<int>(positive.rows()); }
  int cols() const { return static_cast<int>(positive.cols()); }
  double total() const { return positive.sum() + negative.sum(); }
};

/// Tallies labels; throws ContractViolation on any index outside rows x cols.
EntryCounts tally(const ObservationSet& data, int rows, int cols);

/// Marginal law of the observed index over [d1] x [d2].
class SamplingDistribution {
 public:
  /// Validates nonnegativity and that the entries sum to one (abs tol 1e-12).
  explicit SamplingDistribution(Matrix probs);

  static SamplingDistribution uniform(int d1, int d2);

  const Matrix& probs() const { return probs_; }
  double c1() const { return c1_; }
  int rows() const { return static_cast<int>(probs_.rows()); }
  int cols() const { return static_cast<int>(probs_.cols()); }

 private:
  Matrix probs_;
  double c1_;
};

/// Probability of label y at entry (i, j) under parameter m.
double likelihood_of_label(const Matrix& m, int i, int j, int y);

/// Plain (alpha = 1) log-likelihood.
double log_likelihood(const Matrix& m, const ObservationSet& data);
double log_likelihood(const Matrix& m, const EntryCounts& counts);

/// alpha * log L_n(M).
double frac_log_likelihood(const Matrix& m, const ObservationSet& data,
                           FractionalExponent alpha);
double frac_log_likelihood(const Matrix& m, const EntryCounts& counts,
                           FractionalExponent alpha);

/// Entry (i, j): alpha * sum over observations at (i, j) of ((1+y)/2 - f(M_ij)).
Matrix frac_log_likelihood_grad(const Matrix& m, const ObservationSet& data,
                                FractionalExponent alpha);
Matrix frac_log_likelihood_grad(const Matrix& m, const EntryCounts& counts,
                                FractionalExponent alpha);

}  // namespace onebit
