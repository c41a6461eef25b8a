#include "onebit/core_model.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace onebit {

bool all_finite(const Matrix& m) { return m.allFinite(); }

double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_logistic(double x) {
  if (x >= 0.0) {
    return -std::log1p(std::exp(-x));
  }
  return x - std::log1p(std::exp(x));
}

FractionalExponent::FractionalExponent(double alpha) : alpha_(alpha) {
  require(alpha > 0.0 && alpha < 1.0,
          "fractional exponent must lie in (0, 1), got " + std::to_string(alpha));
}

ObservationSet::ObservationSet(std::vector<Observation> obs) {
  obs_.reserve(obs.size());
  for (const auto& o : obs) add(o);
}

void ObservationSet::add(Observation o) {
  require(o.y == 1 || o.y == -1, "observation label must be +1 or -1");
  require(o.i >= 0 && o.j >= 0, "observation index must be nonnegative");
  obs_.push_back(o);
}

ObservationSet ObservationSet::merged(const ObservationSet& other) const {
  ObservationSet out = *this;
  out.obs_.insert(out.obs_.end(), other.obs_.begin(), other.obs_.end());
  return out;
}

EntryCounts tally(const ObservationSet& data, int rows, int cols) {
  require(rows >= 1 && cols >= 1, "matrix shape must be positive");
  EntryCounts c{Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)};
  for (const auto& o : data.observations()) {
    if (o.i >= rows || o.j >= cols) {
      std::ostringstream msg;
      msg << "observation index (" << o.i << ", " << o.j << ") outside " << rows
          << "x" << cols;
      throw ContractViolation(msg.str());
    }
    if (o.y == 1) {
      c.positive(o.i, o.j) += 1.0;
    } else {
      c.negative(o.i, o.j) += 1.0;
    }
  }
  return c;
}

SamplingDistribution::SamplingDistribution(Matrix probs) : probs_(std::move(probs)) {
  require(probs_.size() > 0, "sampling distribution must be nonempty");
  require(probs_.allFinite(), "sampling probabilities must be finite");
  require(probs_.minCoeff() >= 0.0, "sampling probabilities must be nonnegative");
  require(std::abs(probs_.sum() - 1.0) <= 1e-12, "sampling probabilities must sum to 1");
  c1_ = probs_.minCoeff();
}

SamplingDistribution SamplingDistribution::uniform(int d1, int d2) {
  require(d1 >= 1 && d2 >= 1, "dimensions must be positive");
  return SamplingDistribution(Matrix::Constant(d1, d2, 1.0 / (double(d1) * d2)));
}

double likelihood_of_label(const Matrix& m, int i, int j, int y) {
  require(y == 1 || y == -1, "label must be +1 or -1");
  require(i >= 0 && i < m.rows() && j >= 0 && j < m.cols(), "index out of range");
  const double p = logistic(m(i, j));
  return y == 1 ? p : logistic(-m(i, j));
}

double log_likelihood(const Matrix& m, const ObservationSet& data) {
  double acc = 0.0;
  for (const auto& o : data.observations()) {
    require(o.i < m.rows() && o.j < m.cols(), "observation index out of range");
    const double x = m(o.i, o.j);
    // log(1 - f(x)) = log f(-x)
    acc += o.y == 1 ? log_logistic(x) : log_logistic(-x);
  }
  return acc;
}

double log_likelihood(const Matrix& m, const EntryCounts& counts) {
  require(m.rows() == counts.rows() && m.cols() == counts.cols(),
          "counts shape does not match parameter");
  double acc = 0.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double np = counts.positive(i, j);
      const double nn = counts.negative(i, j);
      if (np > 0.0) acc += np * log_logistic(m(i, j));
      if (nn > 0.0) acc += nn * log_logistic(-m(i, j));
    }
  }
  return acc;
}

double frac_log_likelihood(const Matrix& m, const ObservationSet& data,
                           FractionalExponent alpha) {
  return alpha.value() * log_likelihood(m, data);
}

double frac_log_likelihood(const Matrix& m, const EntryCounts& counts,
                           FractionalExponent alpha) {
  return alpha.value() * log_likelihood(m, counts);
}

Matrix frac_log_likelihood_grad(const Matrix& m, const ObservationSet& data,
                                FractionalExponent alpha) {
  return frac_log_likelihood_grad(m, tally(data, int(m.rows()), int(m.cols())), alpha);
}

Matrix frac_log_likelihood_grad(const Matrix& m, const EntryCounts& counts,
                                FractionalExponent alpha) {
  require(m.rows() == counts.rows() && m.cols() == counts.cols(),
          "counts shape does not match parameter");
  Matrix g(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double np = counts.positive(i, j);
      const double nn = counts.negative(i, j);
      // n+ (1 - f) - n- f
      g(i, j) = np > 0.0 || nn > 0.0
                    ? np * logistic(-m(i, j)) - nn * logistic(m(i, j))
                    : 0.0;
    }
  }
  return alpha.value() * g;
}

}  // namespace onebit
