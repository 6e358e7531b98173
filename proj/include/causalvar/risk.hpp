#pragma once

#include <cstdint>
#include <limits>

#include <Eigen/Dense>

#include "causalvar/companion.hpp"
#include "causalvar/interventions.hpp"
#include "causalvar/model.hpp"
#include "causalvar/var_process.hpp"

namespace causalvar {

/// True model of order q and fitted model of order p, both padded to
/// nu = max(p, q). The truth must be stationary; the fit need not be.
class ModelPair {
 public:
  ModelPair(VarModel truth, VarModel fitted);

  const VarModel& truth() const noexcept { return truth_; }
  const VarModel& fitted() const noexcept { return fitted_; }
  int nu() const noexcept { return nu_; }
  int dim() const noexcept { return truth_.dim(); }
  const CompanionMatrix& truthCompanion() const noexcept { return a_; }
  const CompanionMatrix& fittedCompanion() const noexcept { return ahat_; }
  /// Sigma^nu of the truth.
  const AutocovMatrix& sigma() const noexcept { return sigma_; }
  double truthModulus() const noexcept { return delta_; }

  /// Top d rows of A^omega - Ahat^omega (d x d*nu); row i is Delta_i.
  Eigen::MatrixXd powerGap(int omega) const;

 private:
  VarModel truth_;
  VarModel fitted_;
  int nu_;
  CompanionMatrix a_;
  CompanionMatrix ahat_;
  AutocovMatrix sigma_;
  double delta_;
};

/// E[zeta_i^2] = sigma^2 sum_{j<omega} sum_{k<=d} (A^j)_{ik}^2, per component.
Eigen::VectorXd noiseFloor(const VarModel& truth, int omega);
double noiseFloor(const VarModel& truth, int omega, int component);

/// S_omega per output component.
Eigen::VectorXd statRisk(const ModelPair& pair, int omega);

/// Interventional risk per output component at horizon spec.omega: Gamma for
/// atomicAveraged, Gamma' for atomicFixed, S + alpha^2 (sum_c Delta_ic)^2 for
/// relativeShift.
Eigen::VectorXd causalRisk(const ModelPair& pair, const InterventionSpec& spec);

struct RiskDifference {
  /// sum_i Delta_i^T (Gamma - Sigma) Delta_i, i.e. G - S summed over outputs.
  double quadForm = 0.0;
  /// The same from the cross terms of the zeroed entries.
  double expansion = 0.0;
  /// 2 |Delta_cc sum_{k != c} Delta_ck Sigma_ck| for the intervened index c and
  /// its own output row; NaN unless one index is intervened.
  double singleRow = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd perOutput;
};

/// Requires an atomicAveraged spec.
RiskDifference riskDifference(const ModelPair& pair, const InterventionSpec& spec);

/// ((ahat-a)^T(ahat-a) + s2)/((ahat-a)^T R (ahat-a) + s2) with R the
/// autocorrelation matrix of size nu and s2 = sigma^2/gamma_0: omega = 1, the
/// whole window intervened, unit-variance scaling. d = 1 only.
double riskQuotient(const ModelPair& pair);

/// (A^omega_11 - Ahat^omega_11)^2 alpha^2. d = 1 only.
double relativeShiftGap(const ModelPair& pair, int omega, double alpha);

struct Estimate {
  double mean = 0.0;
  double stdErr = 0.0;
  std::int64_t count = 0;
};

/// Running mean and standard error (Welford, mergeable).
class Accumulator {
 public:
  void add(double v) noexcept;
  void merge(const Accumulator& o) noexcept;
  Estimate estimate() const noexcept;

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Mean squared omega-step error of the plug-in predictor (future noise set
/// to zero) over every window of the path. The standard error treats windows
/// as independent.
Estimate empiricalStatRisk(const VarModel& fitted, const SamplePath& path, int omega,
                           int component = 0);

/// Windows of the path are intervened `draws` times each; targets are
/// regenerated by the truth and predicted by the fit from the modified window.
Estimate empiricalCausalRisk(const VarModel& truth, const VarModel& fitted, const SamplePath& path,
                             const InterventionSpec& spec, int draws, std::uint64_t seed,
                             int component = 0);

struct MonteCarloRisk {
  Estimate stat;
  Estimate causal;
  Estimate gap;  ///< paired G - S with common innovations
};

/// Independent windows drawn from the exact stationary law of the truth, each
/// used once observationally and once under the intervention with the same
/// innovations. Deterministic in (seed, draws) regardless of `threads`.
MonteCarloRisk monteCarloRisks(const ModelPair& pair, const InterventionSpec& spec, int component,
                               std::int64_t draws, std::uint64_t seed, int threads = 1,
                               const Eigen::MatrixXd& marginalPool = {});

enum class RiskMethod { analytic, monteCarlo, empiricalSample };

struct RiskReport {
  double sOmega = 0.0;
  double gDo = std::numeric_limits<double>::quiet_NaN();
  double gAvg = 0.0;
  double gShift = std::numeric_limits<double>::quiet_NaN();
  double diff = 0.0;
  double crossTermDiff = std::numeric_limits<double>::quiet_NaN();
  double noiseFloor = 0.0;
  double quotient = 0.0;
  double fullWindowQuotient = std::numeric_limits<double>::quiet_NaN();
  RiskMethod method = RiskMethod::analytic;
  int omega = 1;
  int component = 0;
  InterventionSpec spec;
};

/// gAvg always refers to the averaged intervention on spec's components;
/// gDo and gShift are filled for fixed and shift specs.
RiskReport analyticReport(const ModelPair& pair, const InterventionSpec& spec, int component);

}  // namespace causalvar
