#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "causalvar/estimators.hpp"
#include "causalvar/model.hpp"

namespace causalvar {

enum class ExperimentMode { standard, sampleSweep, omegaSweep, confounded };

std::string toString(ExperimentMode mode);
ExperimentMode parseMode(const std::string& name);

enum class Regime { single, allWindow };

struct ExperimentConfig {
  int nProcesses = 10000;
  std::vector<int> orders{3, 5, 7};
  /// (p_fit, q_true) pairs; when non-empty they replace `orders`.
  std::vector<std::pair<int, int>> orderPairs;
  double coeffLo = -2.0;
  double coeffHi = 2.0;
  double noiseVariance = 1.0;
  int nTrain = 100;
  int nTest = 1000;
  int omega = 1;
  std::vector<EstimatorKind> estimators{EstimatorKind::ols};
  int bucketSize = 500;
  std::uint64_t masterSeed = 0;
  ExperimentMode mode = ExperimentMode::standard;
  std::vector<int> sampleSizes{10, 100, 1000};
  std::vector<int> omegas{1, 5, 7};
  int maxTries = 1000000;
  int mcDraws = 2000;
  CvOptions cv;
  double rho = 0.0;  ///< <= 0: spectral radius of the truth
  double confidence = 0.05;
  int rademacherDraws = 200;
  double kp = 0.0;  ///< <= 0: 4 q^q
  /// Monte-Carlo x* resampled from the training path instead of N(0, gamma_0).
  bool empiricalMarginal = false;

  void validate() const;
};

/// Flat key=value view, the format read by configFromMap and echoed in
/// metadata. Every field appears.
std::map<std::string, std::string> configToMap(const ExperimentConfig& cfg);
/// Unknown keys or malformed values throw ConfigError. The defaults of each
/// mode (ridge for sampleSweep, p = 5 for omegaSweep) apply unless the key is
/// present.
ExperimentConfig configFromMap(const std::map<std::string, std::string>& kv);

struct ExperimentRecord {
  int processId = 0;
  int q = 0;
  int pFit = 0;
  EstimatorKind estimator = EstimatorKind::ols;
  int omega = 1;
  Regime regime = Regime::single;
  int nTrain = 0;
  double kappa = 0.0;       ///< autocorrelation matrix of size nu
  double kappaSigma = 0.0;  ///< Sigma^nu (true), or estimated in confounded mode
  double delta = 0.0;
  bool fitStable = true;
  double lambda = 0.0;
  double muMix = 0.0;
  double sAnalytic = 0.0;
  double sEmpirical = 0.0;
  double sEmpiricalSe = 0.0;
  double gAnalytic = 0.0;
  double gMonteCarlo = 0.0;
  double gMonteCarloSe = 0.0;
  double absDiff = 0.0;
  double prop1Rhs = 0.0;
  bool prop1Holds = true;
  double cor2Rhs = 0.0;
  double schurRhs = 0.0;
  double thm1Rhs = 0.0;
  std::vector<double> truthCoeffs;
  std::vector<double> fittedCoeffs;
};

struct BucketSummary {
  double kappaMid = 0.0;
  double maxDiff = 0.0;
  double meanDiff = 0.0;
  double q90Diff = 0.0;
  double bound = 0.0;
  int count = 0;
};

/// Sorted by kappa (process id breaks ties), consecutive buckets of
/// bucketSize; a trailing partial bucket is dropped.
std::vector<BucketSummary> bucketByKappa(std::vector<ExperimentRecord> records, int bucketSize);

/// Linear-interpolation quantile of unsorted data.
double quantile(std::vector<double> v, double q);

struct DistributionSummary {
  std::string label;
  double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0, mean = 0.0, std = 0.0;
  int count = 0;
};
DistributionSummary summarize(const std::string& label, const std::vector<double>& v);

struct SummaryTable {
  std::string name;  ///< file stem, e.g. "summaries" or "summaries_n100"
  std::vector<BucketSummary> buckets;
  int dropped = 0;  ///< records in the dropped partial bucket
};

struct ExperimentResult {
  std::vector<ExperimentRecord> records;
  std::vector<SummaryTable> tables;
  std::vector<DistributionSummary> distributions;
  std::map<std::string, int> skipped;  ///< reason -> process count
  int prop1Violations = 0;
  int thm1Violations = 0;
  int thm1Unavailable = 0;
};

ExperimentResult runStandard(const ExperimentConfig& cfg, int threads);
ExperimentResult runSampleSweep(const ExperimentConfig& cfg, int threads);
ExperimentResult runOmegaSweep(const ExperimentConfig& cfg, int threads);
ExperimentResult runConfounded(const ExperimentConfig& cfg, int threads);
/// Dispatches on cfg.mode.
ExperimentResult runExperiment(const ExperimentConfig& cfg, int threads);

inline constexpr const char* kRecordsHeader =
    "process_id,q,p_fit,estimator,omega,regime,n_train,kappa,kappa_sigma,delta,fit_stable,lambda,"
    "mu_mix,s_analytic,s_empirical,s_empirical_se,g_analytic,g_monte_carlo,g_monte_carlo_se,"
    "abs_diff,prop1_rhs,prop1_holds,cor2_rhs,schur_rhs,thm1_rhs,truth_coeffs,fitted_coeffs";
inline constexpr const char* kSummariesHeader = "kappa_mid,max_diff,mean_diff,q90_diff,bound,count";
inline constexpr const char* kDistributionHeader = "label,count,min,q25,median,q75,max,mean,std";

/// Writes records.csv, one CSV per summary table, distributions.csv when
/// present, and metadata.json into `dir`. Returns the written paths.
std::vector<std::string> writeExperiment(const ExperimentResult& result, const ExperimentConfig& cfg,
                                         const std::string& dir);

}  // namespace causalvar
