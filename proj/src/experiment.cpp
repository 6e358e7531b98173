#include "causalvar/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "causalvar/bounds.hpp"
#include "causalvar/error.hpp"
#include "causalvar/io.hpp"
#include "causalvar/parallel.hpp"
#include "causalvar/risk.hpp"
#include "causalvar/seeding.hpp"
#include "causalvar/var_process.hpp"

namespace causalvar {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Seed stages per process.
enum Stage : std::uint64_t { kModel = 0, kTrain = 1, kTest = 2, kMonteCarlo = 3, kRademacher = 4, kCv = 5 };

template <class T, class F>
std::string join(const std::vector<T>& v, F&& f, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += f(v[i]);
  }
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

template <class T>
T parseNumber(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  return v;
}

template <class T>
std::vector<T> parseList(const std::string& key, const std::string& text) {
  std::vector<T> out;
  for (const std::string& item : split(text, ',')) out.push_back(parseNumber<T>(key, item));
  return out;
}

bool parseBool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

std::pair<int, int> orderFor(const ExperimentConfig& cfg, int i) {
  if (!cfg.orderPairs.empty()) return cfg.orderPairs[static_cast<std::size_t>(i) % cfg.orderPairs.size()];
  const int q = cfg.orders[static_cast<std::size_t>(i) % cfg.orders.size()];
  return {q, q};
}

std::vector<double> flatten(const VarModel& m) {
  std::vector<double> out;
  for (const Eigen::MatrixXd& a : m.coeffs())
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index c = 0; c < a.cols(); ++c) out.push_back(a(r, c));
  return out;
}

FitResult fitOne(const ExperimentConfig& cfg, const SamplePath& train, int pFit, EstimatorKind e,
                 std::uint64_t seed) {
  if (e == EstimatorKind::ols) return fitOLS(buildDesign(train, pFit));
  CvOptions cv = cfg.cv;
  cv.seed = seed;
  // Very short training paths cannot fill the configured number of folds.
  cv.folds = std::min(cv.folds, train.length() - pFit);
  if (cv.folds < 2) throw InvalidInput("training path too short for cross-validation");
  return fitCV(train, pFit, e, cv);
}

// A scalar AR fit on component 0 written as a d = 2 VAR acting on that
// component only.
VarModel embedObserved(const VarModel& scalarFit) {
  std::vector<Eigen::MatrixXd> blocks;
  for (const Eigen::MatrixXd& a : scalarFit.coeffs()) {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 2);
    b(0, 0) = a(0, 0);
    blocks.push_back(b);
  }
  return VarModel(std::move(blocks), scalarFit.noiseVariance());
}

struct Evaluation {
  int omega;
  Regime regime;
};

// Shared tail: risks, bounds and cross-checks for one (pair, horizon, regime).
ExperimentRecord evaluate(const ExperimentConfig& cfg, const ModelPair& pair,
                          const SamplePath& train, const SamplePath& test, const FitResult& fit,
                          int processId, int q, int pFit, Evaluation ev, double kappa,
                          double kappaSigma, bool withScalarBounds, ExperimentResult& counters) {
  ExperimentRecord r;
  r.processId = processId;
  r.q = q;
  r.pFit = pFit;
  r.estimator = fit.estimator;
  r.omega = ev.omega;
  r.regime = ev.regime;
  r.nTrain = train.length();
  r.kappa = kappa;
  r.kappaSigma = kappaSigma;
  r.delta = pair.truthModulus();
  r.fitStable = isStationary(fit.model).stationary;
  r.lambda = fit.lambda;
  r.muMix = fit.muMix;

  const int steps = ev.regime == Regime::allWindow ? pair.nu() : 1;
  const InterventionSpec spec = InterventionSpec::averaged(ev.omega, {0}, steps);
  r.sAnalytic = statRisk(pair, ev.omega)(0);
  r.gAnalytic = causalRisk(pair, spec)(0);
  r.absDiff = std::abs(r.gAnalytic - r.sAnalytic);
  const double sigma2 = pair.truth().noiseVariance();
  const double excess = r.sAnalytic - sigma2;
  r.prop1Rhs = excess <= 0.0 ? 0.0 : (2.0 * kappaSigma - 1.0) * excess;
  r.prop1Holds = r.absDiff <= r.prop1Rhs + 1e-9 * (1.0 + std::abs(r.prop1Rhs));

  r.cor2Rhs = kNaN;
  r.schurRhs = kNaN;
  r.thm1Rhs = kNaN;
  if (ev.regime == Regime::single) {
    if (withScalarBounds) {
      r.cor2Rhs = cor2Bound(pair, ev.omega, cfg.kp).value;
      r.schurRhs = schurTightBound(pair, ev.omega).value;
    }
    try {
      const int rows = train.length() - pFit - ev.omega + 1;
      const double rho = cfg.rho > 0.0 ? cfg.rho : pair.truthModulus();
      const BlockScheme scheme = BlockScheme::standard(rows, rho, cfg.confidence);
      Thm1Options o;
      o.omega = ev.omega;
      o.kappa = kappaSigma;
      o.rho = rho;
      o.confidence = cfg.confidence;
      o.rademacherDraws = cfg.rademacherDraws;
      o.seed = deriveSeed(cfg.masterSeed, {static_cast<std::uint64_t>(processId), kRademacher,
                                           static_cast<std::uint64_t>(ev.omega)});
      const BoundReport b = thm1Bound(pair, train, scheme, o);
      r.thm1Rhs = b.value;
      if (!b.holds) ++counters.thm1Violations;
    } catch (const InvalidInput&) {
      ++counters.thm1Unavailable;
    }
  }
  if (!r.prop1Holds) ++counters.prop1Violations;

  try {
    const Estimate s = empiricalStatRisk(pair.fitted(), test, ev.omega, 0);
    r.sEmpirical = s.mean;
    r.sEmpiricalSe = s.stdErr;
  } catch (const InvalidInput&) {
    r.sEmpirical = r.sEmpiricalSe = kNaN;
  }
  if (cfg.mcDraws > 0) {
    const MonteCarloRisk mc = monteCarloRisks(
        pair, spec, 0, cfg.mcDraws,
        deriveSeed(cfg.masterSeed, {static_cast<std::uint64_t>(processId), kMonteCarlo,
                                    static_cast<std::uint64_t>(ev.omega),
                                    static_cast<std::uint64_t>(ev.regime)}),
        1, cfg.empiricalMarginal ? train.values : Eigen::MatrixXd());
    r.gMonteCarlo = mc.causal.mean;
    r.gMonteCarloSe = mc.causal.stdErr;
  } else {
    r.gMonteCarlo = r.gMonteCarloSe = kNaN;
  }
  r.truthCoeffs = flatten(pair.truth());
  return r;
}

struct ProcessOutput {
  std::vector<ExperimentRecord> records;
  std::string skipReason;
  ExperimentResult counters;
};

std::string skipReason(const Error& e) {
  if (dynamic_cast<const DegenerateSpectrum*>(&e)) return "degenerate_spectrum";
  if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
  return "invalid_input";
}

ProcessOutput processScalar(const ExperimentConfig& cfg, int i, int nTrain,
                            const std::vector<Evaluation>& evals) {
  ProcessOutput out;
  const auto id = static_cast<std::uint64_t>(i);
  const auto [pFit, q] = orderFor(cfg, i);
  std::optional<VarModel> truth;
  try {
    truth = rejectionSampleStable(q, 1, cfg.coeffLo, cfg.coeffHi,
                                  deriveSeed(cfg.masterSeed, {id, kModel}), cfg.maxTries,
                                  cfg.noiseVariance);
  } catch (const NumericalError&) {
    out.skipReason = "rejection_exhausted";
    return out;
  }
  try {
    const SamplePath train = simulate(*truth, nTrain, deriveSeed(cfg.masterSeed, {id, kTrain}));
    const SamplePath test = simulate(*truth, cfg.nTest, deriveSeed(cfg.masterSeed, {id, kTest}));
    for (EstimatorKind e : cfg.estimators) {
      const FitResult fit = fitOne(cfg, train, pFit, e, deriveSeed(cfg.masterSeed, {id, kCv}));
      const ModelPair pair(*truth, fit.model);
      const double kappa = autocorrelationCondition(pair.sigma());
      const double kappaSigma = conditionNumber(pair.sigma());
      for (const Evaluation& ev : evals) {
        ExperimentRecord r = evaluate(cfg, pair, train, test, fit, i, q, pFit, ev, kappa,
                                      kappaSigma, true, out.counters);
        r.fittedCoeffs = flatten(fit.model);
        out.records.push_back(std::move(r));
      }
    }
  } catch (const Error& e) {
    out.records.clear();
    out.skipReason = skipReason(e);
  }
  return out;
}

ProcessOutput processConfounded(const ExperimentConfig& cfg, int i, const std::vector<Evaluation>& evals) {
  ProcessOutput out;
  const auto id = static_cast<std::uint64_t>(i);
  const int pFit = orderFor(cfg, i).first;
  std::optional<VarModel> truth;
  try {
    truth = rejectionSampleStable(1, 2, cfg.coeffLo, cfg.coeffHi,
                                  deriveSeed(cfg.masterSeed, {id, kModel}), cfg.maxTries,
                                  cfg.noiseVariance);
  } catch (const NumericalError&) {
    out.skipReason = "rejection_exhausted";
    return out;
  }
  try {
    const SamplePath train = simulate(*truth, cfg.nTrain, deriveSeed(cfg.masterSeed, {id, kTrain}));
    const SamplePath test = simulate(*truth, cfg.nTest, deriveSeed(cfg.masterSeed, {id, kTest}));
    SamplePath observed = train;
    observed.values = train.values.col(0);
    // Only the observed dimension informs kappa.
    const AutocovMatrix sigmaHat = empiricalAutocov(observed, pFit);
    const double kappa = autocorrelationCondition(sigmaHat);
    const double kappaSigma = conditionNumber(sigmaHat);
    for (EstimatorKind e : cfg.estimators) {
      FitResult fit = fitOne(cfg, observed, pFit, e, deriveSeed(cfg.masterSeed, {id, kCv}));
      const std::vector<double> scalarCoeffs = flatten(fit.model);
      fit.model = embedObserved(fit.model);
      const ModelPair pair(*truth, fit.model);
      for (const Evaluation& ev : evals) {
        ExperimentRecord r = evaluate(cfg, pair, train, test, fit, i, 1, pFit, ev, kappa,
                                      kappaSigma, false, out.counters);
        r.fittedCoeffs = scalarCoeffs;
        out.records.push_back(std::move(r));
      }
    }
  } catch (const Error& e) {
    out.records.clear();
    out.skipReason = skipReason(e);
  }
  return out;
}

template <class Fn>
ExperimentResult collect(const ExperimentConfig& cfg, int threads, Fn&& perProcess) {
  std::vector<ProcessOutput> slots(static_cast<std::size_t>(cfg.nProcesses));
  parallelFor(slots.size(), threads, [&](std::size_t i) { slots[i] = perProcess(static_cast<int>(i)); });
  ExperimentResult res;
  for (ProcessOutput& s : slots) {
    if (!s.skipReason.empty()) ++res.skipped[s.skipReason];
    res.prop1Violations += s.counters.prop1Violations;
    res.thm1Violations += s.counters.thm1Violations;
    res.thm1Unavailable += s.counters.thm1Unavailable;
    for (ExperimentRecord& r : s.records) res.records.push_back(std::move(r));
  }
  return res;
}

void merge(ExperimentResult& into, ExperimentResult&& from) {
  for (ExperimentRecord& r : from.records) into.records.push_back(std::move(r));
  for (auto& [k, v] : from.skipped) into.skipped[k] += v;
  into.prop1Violations += from.prop1Violations;
  into.thm1Violations += from.thm1Violations;
  into.thm1Unavailable += from.thm1Unavailable;
}

SummaryTable table(const std::string& name, std::vector<ExperimentRecord> records, int bucketSize) {
  SummaryTable t;
  t.name = name;
  t.dropped = static_cast<int>(records.size()) % bucketSize;
  t.buckets = bucketByKappa(std::move(records), bucketSize);
  return t;
}

template <class Pred>
std::vector<ExperimentRecord> select(const std::vector<ExperimentRecord>& all, Pred&& keep) {
  std::vector<ExperimentRecord> out;
  std::copy_if(all.begin(), all.end(), std::back_inserter(out), keep);
  return out;
}

std::vector<double> diffs(const std::vector<ExperimentRecord>& records) {
  std::vector<double> v;
  for (const ExperimentRecord& r : records) v.push_back(r.absDiff);
  return v;
}

std::string estimatorSuffix(const ExperimentConfig& cfg, EstimatorKind e) {
  return cfg.estimators.size() > 1 ? "_" + toString(e) : "";
}

}  // namespace

std::string toString(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::standard: return "standard";
    case ExperimentMode::sampleSweep: return "sampleSweep";
    case ExperimentMode::omegaSweep: return "omegaSweep";
    case ExperimentMode::confounded: return "confounded";
  }
  return "?";
}

ExperimentMode parseMode(const std::string& name) {
  if (name == "standard") return ExperimentMode::standard;
  if (name == "sampleSweep" || name == "sample_sweep") return ExperimentMode::sampleSweep;
  if (name == "omegaSweep" || name == "omega_sweep") return ExperimentMode::omegaSweep;
  if (name == "confounded") return ExperimentMode::confounded;
  throw ConfigError("unknown mode '" + name + "'");
}

void ExperimentConfig::validate() const {
  const auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  need(nProcesses >= 1, "n_processes must be >= 1");
  need(!orders.empty() || !orderPairs.empty(), "orders must not be empty");
  for (int p : orders) need(p >= 1, "orders must be >= 1");
  for (auto [p, q] : orderPairs) need(p >= 1 && q >= 1, "order_pairs entries must be >= 1");
  need(coeffLo < coeffHi, "coeff_lo must be below coeff_hi");
  need(noiseVariance > 0.0 && std::isfinite(noiseVariance), "noise_variance must be positive");
  need(nTrain >= 2 && nTest >= 2, "n_train and n_test must be >= 2");
  need(omega >= 1, "omega must be >= 1");
  need(!estimators.empty(), "estimators must not be empty");
  need(bucketSize >= 1, "bucket_size must be >= 1");
  need(!sampleSizes.empty(), "sample_sizes must not be empty");
  for (int n : sampleSizes) need(n >= 2, "sample_sizes must be >= 2");
  need(!omegas.empty(), "omegas must not be empty");
  for (int w : omegas) need(w >= 1, "omegas must be >= 1");
  need(maxTries >= 1, "max_tries must be >= 1");
  need(mcDraws >= 0, "mc_draws must be >= 0");
  need(cv.folds >= 2, "cv_folds must be >= 2");
  need(!cv.lambdaGrid.empty(), "lambda_grid must not be empty");
  for (double l : cv.lambdaGrid) need(l >= 0.0 && std::isfinite(l), "lambda_grid entries must be >= 0");
  need(!cv.muGrid.empty(), "mu_grid must not be empty");
  for (double m : cv.muGrid) need(m >= 0.0 && m <= 1.0, "mu_grid entries must lie in [0, 1]");
  need(rho < 1.0, "rho must be below 1");
  need(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0, 1)");
  need(rademacherDraws >= 1, "rademacher_draws must be >= 1");
}

std::map<std::string, std::string> configToMap(const ExperimentConfig& c) {
  const auto num = [](double v) { return formatNumber(v); };
  const auto integer = [](int v) { return std::to_string(v); };
  std::map<std::string, std::string> kv;
  kv["n_processes"] = integer(c.nProcesses);
  kv["orders"] = join(c.orders, integer);
  kv["order_pairs"] = join(c.orderPairs, [](const std::pair<int, int>& pq) {
    return std::to_string(pq.first) + ":" + std::to_string(pq.second);
  });
  kv["coeff_lo"] = num(c.coeffLo);
  kv["coeff_hi"] = num(c.coeffHi);
  kv["noise_variance"] = num(c.noiseVariance);
  kv["n_train"] = integer(c.nTrain);
  kv["n_test"] = integer(c.nTest);
  kv["omega"] = integer(c.omega);
  kv["estimators"] = join(c.estimators, [](EstimatorKind e) { return toString(e); });
  kv["bucket_size"] = integer(c.bucketSize);
  kv["seed"] = std::to_string(c.masterSeed);
  kv["mode"] = toString(c.mode);
  kv["sample_sizes"] = join(c.sampleSizes, integer);
  kv["omegas"] = join(c.omegas, integer);
  kv["max_tries"] = integer(c.maxTries);
  kv["mc_draws"] = integer(c.mcDraws);
  kv["cv_folds"] = integer(c.cv.folds);
  kv["cv_shuffle"] = c.cv.shuffle ? "true" : "false";
  kv["lambda_grid"] = join(c.cv.lambdaGrid, num);
  kv["mu_grid"] = join(c.cv.muGrid, num);
  kv["rho"] = num(c.rho);
  kv["confidence"] = num(c.confidence);
  kv["rademacher_draws"] = integer(c.rademacherDraws);
  kv["kp"] = num(c.kp);
  kv["marginal"] = c.empiricalMarginal ? "empirical" : "exact";
  return kv;
}

ExperimentConfig configFromMap(const std::map<std::string, std::string>& kv) {
  ExperimentConfig c;
  if (auto it = kv.find("mode"); it != kv.end()) c.mode = parseMode(it->second);
  if (c.mode == ExperimentMode::sampleSweep) c.estimators = {EstimatorKind::ridge};
  if (c.mode == ExperimentMode::omegaSweep) c.orders = {5};
  for (const auto& [key, value] : kv) {
    if (key == "mode") continue;
    if (key == "n_processes") c.nProcesses = parseNumber<int>(key, value);
    else if (key == "orders") c.orders = parseList<int>(key, value);
    else if (key == "order_pairs") {
      c.orderPairs.clear();
      for (const std::string& item : split(value, ',')) {
        const auto parts = split(item, ':');
        if (parts.size() != 2) throw ConfigError("config key 'order_pairs': expected p_fit:q_true, got '" + item + "'");
        c.orderPairs.emplace_back(parseNumber<int>(key, parts[0]), parseNumber<int>(key, parts[1]));
      }
    } else if (key == "coeff_lo") c.coeffLo = parseNumber<double>(key, value);
    else if (key == "coeff_hi") c.coeffHi = parseNumber<double>(key, value);
    else if (key == "noise_variance") c.noiseVariance = parseNumber<double>(key, value);
    else if (key == "n_train") c.nTrain = parseNumber<int>(key, value);
    else if (key == "n_test") c.nTest = parseNumber<int>(key, value);
    else if (key == "omega") c.omega = parseNumber<int>(key, value);
    else if (key == "estimators") {
      c.estimators.clear();
      for (const std::string& e : split(value, ',')) c.estimators.push_back(parseEstimator(e));
    } else if (key == "bucket_size") c.bucketSize = parseNumber<int>(key, value);
    else if (key == "seed") c.masterSeed = parseNumber<std::uint64_t>(key, value);
    else if (key == "sample_sizes") c.sampleSizes = parseList<int>(key, value);
    else if (key == "omegas") c.omegas = parseList<int>(key, value);
    else if (key == "max_tries") c.maxTries = parseNumber<int>(key, value);
    else if (key == "mc_draws") c.mcDraws = parseNumber<int>(key, value);
    else if (key == "cv_folds") c.cv.folds = parseNumber<int>(key, value);
    else if (key == "cv_shuffle") c.cv.shuffle = parseBool(key, value);
    else if (key == "lambda_grid") c.cv.lambdaGrid = parseList<double>(key, value);
    else if (key == "mu_grid") c.cv.muGrid = parseList<double>(key, value);
    else if (key == "rho") c.rho = parseNumber<double>(key, value);
    else if (key == "confidence") c.confidence = parseNumber<double>(key, value);
    else if (key == "rademacher_draws") c.rademacherDraws = parseNumber<int>(key, value);
    else if (key == "kp") c.kp = parseNumber<double>(key, value);
    else if (key == "marginal") {
      if (value != "exact" && value != "empirical")
        throw ConfigError("config key 'marginal': expected exact or empirical, got '" + value + "'");
      c.empiricalMarginal = value == "empirical";
    } else throw ConfigError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw InvalidInput("quantile of empty data");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

DistributionSummary summarize(const std::string& label, const std::vector<double>& v) {
  DistributionSummary s;
  s.label = label;
  s.count = static_cast<int>(v.size());
  if (v.empty()) return s;
  s.min = quantile(v, 0.0);
  s.q25 = quantile(v, 0.25);
  s.median = quantile(v, 0.5);
  s.q75 = quantile(v, 0.75);
  s.max = quantile(v, 1.0);
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return s;
}

std::vector<BucketSummary> bucketByKappa(std::vector<ExperimentRecord> records, int bucketSize) {
  if (bucketSize < 1) throw InvalidInput("bucketByKappa: bucket size must be positive");
  std::stable_sort(records.begin(), records.end(), [](const ExperimentRecord& a, const ExperimentRecord& b) {
    if (a.kappa != b.kappa) return a.kappa < b.kappa;
    return a.processId < b.processId;
  });
  std::vector<BucketSummary> out;
  const std::size_t size = static_cast<std::size_t>(bucketSize);
  for (std::size_t start = 0; start + size <= records.size(); start += size) {
    std::vector<double> d, kappas;
    BucketSummary b;
    b.count = bucketSize;
    for (std::size_t i = start; i < start + size; ++i) {
      d.push_back(records[i].absDiff);
      kappas.push_back(records[i].kappa);
      b.bound = std::max(b.bound, records[i].prop1Rhs);
    }
    b.kappaMid = quantile(kappas, 0.5);
    b.maxDiff = *std::max_element(d.begin(), d.end());
    b.meanDiff = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    b.q90Diff = quantile(d, 0.9);
    out.push_back(b);
  }
  return out;
}

ExperimentResult runStandard(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const std::vector<Evaluation> evals{{cfg.omega, Regime::single}};
  ExperimentResult res = collect(cfg, threads, [&](int i) { return processScalar(cfg, i, cfg.nTrain, evals); });
  for (EstimatorKind e : cfg.estimators) {
    auto rs = select(res.records, [e](const ExperimentRecord& r) { return r.estimator == e; });
    res.tables.push_back(table("summaries" + estimatorSuffix(cfg, e), std::move(rs), cfg.bucketSize));
  }
  return res;
}

ExperimentResult runSampleSweep(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const std::vector<Evaluation> evals{{cfg.omega, Regime::single}};
  ExperimentResult res;
  for (int n : cfg.sampleSizes) {
    ExperimentResult part = collect(cfg, threads, [&](int i) { return processScalar(cfg, i, n, evals); });
    for (EstimatorKind e : cfg.estimators) {
      auto rs = select(part.records, [e](const ExperimentRecord& r) { return r.estimator == e; });
      const std::string tag = "n" + std::to_string(n) + estimatorSuffix(cfg, e);
      res.distributions.push_back(summarize(tag, diffs(rs)));
      res.tables.push_back(table("summaries_" + tag, std::move(rs), cfg.bucketSize));
    }
    merge(res, std::move(part));
  }
  return res;
}

ExperimentResult runOmegaSweep(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  std::vector<Evaluation> evals;
  for (int w : cfg.omegas) {
    evals.push_back({w, Regime::single});
    evals.push_back({w, Regime::allWindow});
  }
  ExperimentResult res = collect(cfg, threads, [&](int i) { return processScalar(cfg, i, cfg.nTrain, evals); });
  for (EstimatorKind e : cfg.estimators) {
    for (const Evaluation& ev : evals) {
      auto rs = select(res.records, [&](const ExperimentRecord& r) {
        return r.estimator == e && r.omega == ev.omega && r.regime == ev.regime;
      });
      const std::string tag = "omega" + std::to_string(ev.omega) +
                              (ev.regime == Regime::single ? "_single" : "_all") +
                              estimatorSuffix(cfg, e);
      res.distributions.push_back(summarize(tag, diffs(rs)));
      res.tables.push_back(table("summaries_" + tag, std::move(rs), cfg.bucketSize));
    }
  }
  return res;
}

ExperimentResult runConfounded(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const std::vector<Evaluation> evals{{cfg.omega, Regime::single}};
  ExperimentResult res = collect(cfg, threads, [&](int i) { return processConfounded(cfg, i, evals); });
  for (EstimatorKind e : cfg.estimators) {
    auto rs = select(res.records, [e](const ExperimentRecord& r) { return r.estimator == e; });
    res.tables.push_back(table("summaries" + estimatorSuffix(cfg, e), std::move(rs), cfg.bucketSize));
  }
  return res;
}

ExperimentResult runExperiment(const ExperimentConfig& cfg, int threads) {
  switch (cfg.mode) {
    case ExperimentMode::standard: return runStandard(cfg, threads);
    case ExperimentMode::sampleSweep: return runSampleSweep(cfg, threads);
    case ExperimentMode::omegaSweep: return runOmegaSweep(cfg, threads);
    case ExperimentMode::confounded: return runConfounded(cfg, threads);
  }
  throw ConfigError("unknown mode");
}

std::vector<std::string> writeExperiment(const ExperimentResult& result, const ExperimentConfig& cfg,
                                         const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
  std::vector<std::string> written;
  const auto open = [&](const std::string& name) {
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    written.push_back(path);
    return out;
  };
  const auto f = [](double v) { return formatNumber(v); };
  {
    std::ofstream out = open("records.csv");
    out << kRecordsHeader << '\n';
    for (const ExperimentRecord& r : result.records) {
      out << r.processId << ',' << r.q << ',' << r.pFit << ',' << toString(r.estimator) << ','
          << r.omega << ',' << (r.regime == Regime::single ? "single" : "all") << ',' << r.nTrain
          << ',' << f(r.kappa) << ',' << f(r.kappaSigma) << ',' << f(r.delta) << ','
          << (r.fitStable ? 1 : 0) << ',' << f(r.lambda) << ',' << f(r.muMix) << ','
          << f(r.sAnalytic) << ',' << f(r.sEmpirical) << ',' << f(r.sEmpiricalSe) << ','
          << f(r.gAnalytic) << ',' << f(r.gMonteCarlo) << ',' << f(r.gMonteCarloSe) << ','
          << f(r.absDiff) << ',' << f(r.prop1Rhs) << ',' << (r.prop1Holds ? 1 : 0) << ','
          << f(r.cor2Rhs) << ',' << f(r.schurRhs) << ',' << f(r.thm1Rhs) << ','
          << join(r.truthCoeffs, f, ';') << ',' << join(r.fittedCoeffs, f, ';') << '\n';
    }
  }
  nlohmann::json dropped = nlohmann::json::object();
  for (const SummaryTable& t : result.tables) {
    std::ofstream out = open(t.name + ".csv");
    out << kSummariesHeader << '\n';
    for (const BucketSummary& b : t.buckets)
      out << f(b.kappaMid) << ',' << f(b.maxDiff) << ',' << f(b.meanDiff) << ',' << f(b.q90Diff)
          << ',' << f(b.bound) << ',' << b.count << '\n';
    dropped[t.name] = t.dropped;
  }
  if (!result.distributions.empty()) {
    std::ofstream out = open("distributions.csv");
    out << kDistributionHeader << '\n';
    for (const DistributionSummary& s : result.distributions)
      out << s.label << ',' << s.count << ',' << f(s.min) << ',' << f(s.q25) << ',' << f(s.median)
          << ',' << f(s.q75) << ',' << f(s.max) << ',' << f(s.mean) << ',' << f(s.std) << '\n';
  }
  nlohmann::json meta;
  meta["config"] = configToMap(cfg);
  meta["records"] = result.records.size();
  meta["skipped"] = result.skipped;
  meta["prop1_violations"] = result.prop1Violations;
  meta["thm1_violations"] = result.thm1Violations;
  meta["thm1_unavailable"] = result.thm1Unavailable;
  meta["dropped_partial_bucket"] = dropped;
  nlohmann::json files = nlohmann::json::array();
  for (const std::string& p : written) files.push_back(fs::path(p).filename().string());
  meta["files"] = files;
  std::ofstream out = open("metadata.json");
  out << meta.dump(2) << '\n';
  return written;
}

}  // namespace causalvar
