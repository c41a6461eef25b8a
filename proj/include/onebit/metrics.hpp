#pragma once

// Exact divergences between the Bernoulli observation laws induced by two
// parameter matrices, matrix distances, and the transfer constants c_alpha
// and C_kappa.

#include "onebit/core_model.hpp"

namespace onebit {

double bernoulli_kl(double p, double q);
double bernoulli_hellinger_sq(double p, double q);
double bernoulli_renyi(double p, double q, double alpha);

enum class DivergenceType { KL, HellingerSq, Renyi };

/// Joint: sum_ij Pi_ij d(f(A_ij), f(B_ij)), the divergence between the laws
/// of one observation (omega, Y). PaperNormalized additionally divides by
/// d1 d2, the convention carried through the concentration proofs.
enum class Normalization { Joint, PaperNormalized };

struct DivergenceKind {
  DivergenceType type = DivergenceType::HellingerSq;
  Normalization normalization = Normalization::PaperNormalized;
  double alpha = 0.5;  // Renyi order, used only when type == Renyi

  static DivergenceKind kl(Normalization n = Normalization::PaperNormalized) {
    return {DivergenceType::KL, n, 0.5};
  }
  static DivergenceKind hellinger(Normalization n = Normalization::PaperNormalized) {
    return {DivergenceType::HellingerSq, n, 0.5};
  }
  static DivergenceKind renyi(double alpha, Normalization n = Normalization::PaperNormalized) {
    return {DivergenceType::Renyi, n, alpha};
  }
};

double joint_divergence(const Matrix& a, const Matrix& b, const SamplingDistribution& pi,
                        const DivergenceKind& kind);

/// 2(alpha+1)/(1-alpha) on [0.5, 1), 2(alpha+1)/alpha on (0, 0.5).
double c_alpha(double alpha);

/// inf_{|x| <= kappa} f'(x)^2 / (8 f(x)(1 - f(x))) = e^kappa / (8 (1 + e^kappa)^2).
double C_kappa(double kappa);

struct ConstantsReport {
  double c_alpha = 0.0;
  double C_kappa = 0.0;
  double kappa = 0.0;
  double C1 = 0.0;
};

ConstantsReport constants_report(double alpha, double kappa, const SamplingDistribution& pi);

double frobenius_error(const Matrix& a, const Matrix& b);
/// ||A - B||_F^2 / (d1 d2).
double frobenius_sq_normalized(const Matrix& a, const Matrix& b);
double sup_error(const Matrix& a, const Matrix& b);

}  // namespace onebit
