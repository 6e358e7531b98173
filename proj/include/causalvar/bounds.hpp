#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <Eigen/Dense>

#include "causalvar/risk.hpp"
#include "causalvar/var_process.hpp"

namespace causalvar {

/// lambda_max / lambda_min of a symmetric PSD matrix; +infinity when
/// lambda_min < 1e-12 lambda_max.
double conditionNumber(const Eigen::MatrixXd& sym);
double conditionNumber(const AutocovMatrix& sigma);

/// D^{-1/2} Sigma D^{-1/2}, unit diagonal.
Eigen::MatrixXd autocorrelation(const AutocovMatrix& sigma);
double autocorrelationCondition(const AutocovMatrix& sigma);

enum class BoundName { prop1, cor2, schurTight, thm1 };

struct BoundReport {
  BoundName name = BoundName::prop1;
  double value = 0.0;
  double lhs = 0.0;
  bool holds = true;
  double slack = 0.0;
  std::map<std::string, double> inputs;

  /// Sets holds and slack from value and lhs.
  void settle();
};

std::string toString(BoundName name);

/// |G - S| <= (2 kappa(Sigma^nu) - 1)(S_omega - sigma^2), intervening on
/// `component` at horizon omega. For d > 1 both sides are summed over output
/// rows and sigma^2 becomes d sigma^2.
BoundReport prop1Bound(const ModelPair& pair, int omega, int component);

/// K S_omega nu (1 + delta)^{2 nu} / (1 - delta^2), d = 1. kp <= 0 selects
/// 4 q^q with q the order of the truth.
BoundReport cor2Bound(const ModelPair& pair, int omega, double kp = 0.0);

/// Constant used by schurTightBound:
/// 2 (binom(omega+q-1, q-1) + binom(omega+p-1, p-1)).
double schurTightConstant(int p, int q, int omega);

/// K max(delta, deltahat)^omega sum_{k=2}^{nu} |S_k(lambda) - S_k(lambdahat)| |gamma_{k-1}|
/// with S_k the hook Schur polynomial (omega, 1^{k-1}). Repeated eigenvalues
/// switch to companion powers for the same quantity. kpq <= 0 selects
/// schurTightConstant.
BoundReport schurTightBound(const ModelPair& pair, int omega, double kpq = 0.0);

struct BlockScheme {
  int n = 0;
  int mu = 0;
  int m = 0;
  bool fallback = false;

  /// Throws InvalidInput unless 2 mu m = n with mu, m >= 1.
  static BlockScheme make(int mu, int m);
  /// m = ceil(log n), mu = floor(n / 2m). When the mixing correction
  /// 2 (mu - 1) rho^m reaches `confidence`, m grows until it does not (mu = 1
  /// always qualifies) and `fallback` is set.
  static BlockScheme standard(int n, double rho, double confidence);

  double adjustedConfidence(double rho, double confidence) const;
};

/// Lagged omega-step regressors of the last row of each odd block (mu rows of
/// d*p entries) and their targets for `component`.
struct BlockSample {
  Eigen::MatrixXd z;
  Eigen::VectorXd y;
  Eigen::MatrixXd rowsZ;  ///< every row of the odd blocks
  Eigen::VectorXd rowsY;
};
BlockSample blockRegressors(const SamplePath& path, const BlockScheme& scheme, int p, int omega,
                            int component);

/// (4 sqrt(M) B / mu) E_sigma || sum_j sigma_j z_j || over `draws` sign vectors.
double rademacherEstimate(const Eigen::MatrixXd& z, double radius, double truncation,
                          std::uint64_t seed, int draws);

/// 99.9th percentile of squared omega-step errors of `fitted` on `path`.
double defaultTruncation(const VarModel& fitted, const SamplePath& path, int omega, int component);

struct Thm1Options {
  int omega = 1;
  int component = 0;
  double kappa = 0.0;       ///< <= 0: kappa(Sigma^nu) of the truth
  double truncation = 0.0;  ///< M; <= 0: defaultTruncation
  double rho = 0.0;         ///< <= 0: truth spectral radius
  double confidence = 0.05;
  double radius = 0.0;      ///< B; <= 0: norm of the fitted predictor row
  int rademacherDraws = 200;
  std::uint64_t seed = 0;
};

/// zeta S_hat + zeta R_hat + 3 zeta M sqrt(log(4/delta') / 2 mu), zeta = 2 kappa,
/// against lhs = analytic averaged G of the pair. S_hat is the M-truncated
/// empirical risk over the odd-block rows of `path`.
BoundReport thm1Bound(const ModelPair& pair, const SamplePath& path, const BlockScheme& scheme,
                      const Thm1Options& options);

/// Spectral facts for a scalar AR(p) and its n x n autocovariance matrix.
struct SpectralBoundCheck {
  double delta = 0.0;
  double lambdaMin = 0.0;
  double lambdaMinBound = 0.0;  ///< sigma^2 / (1 + delta)^{2p}
  double lambdaMax = 0.0;
  double lambdaMaxBound = 0.0;  ///< 2 p^p n sigma^2 / (1 - delta^2)
  double worstGammaRatio = 0.0;  ///< max_k |gamma_k| / (p^p sigma^2 delta^k / (1 - delta^2))
  int worstGammaLag = 0;
  bool lambdaMinHolds = true;
  bool lambdaMaxHolds = true;
  bool gammaHolds = true;
};
SpectralBoundCheck spectralBoundCheck(const VarModel& ar, int n);

}  // namespace causalvar
