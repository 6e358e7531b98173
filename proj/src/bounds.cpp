#include "causalvar/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "causalvar/error.hpp"
#include "causalvar/seeding.hpp"

namespace causalvar {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (2 kappa - 1) * factor with the 0 * inf case read as 0.
double scaled(double coef, double factor) { return factor <= 0.0 ? 0.0 : coef * factor; }

void requireScalar(const ModelPair& pair, const char* who) {
  if (pair.dim() != 1) throw InvalidInput(std::string(who) + ": scalar processes only");
}

// Squared omega-step errors of `fitted` on every window of the path.
std::vector<double> squaredErrors(const VarModel& fitted, const SamplePath& path, int omega,
                                  int component) {
  const int d = fitted.dim();
  const int p = fitted.order();
  if (path.length() <= p + omega) throw InvalidInput("path too short for p + omega");
  const Eigen::RowVectorXd w = matrixPower(buildCompanion(fitted), omega).row(component);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(path.length()));
  for (int e = p - 1; e + omega < path.length(); ++e) {
    double pred = 0.0;
    for (int l = 0; l < p; ++l) pred += w.segment(l * d, d).dot(path.values.row(e - l));
    const double err = path.values(e + omega, component) - pred;
    out.push_back(err * err);
  }
  return out;
}

// Signed hook Schur values (omega, 1^{k-1}) for k = 2..nu; companion powers
// stand in when the bialternant is refused.
Eigen::VectorXd hookValues(const CompanionMatrix& c, int omega, bool& usedPowers) {
  const int nu = c.p;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(std::max(0, nu - 1));
  try {
    for (int k = 2; k <= nu; ++k) s(k - 2) = hookSchurValue(c, omega, k);
    return s;
  } catch (const NumericalError&) {
    usedPowers = true;
  }
  const Eigen::MatrixXd power = matrixPower(c, omega);
  for (int k = 2; k <= nu; ++k) s(k - 2) = ((k - 1) % 2 == 0 ? 1.0 : -1.0) * power(0, k - 1);
  return s;
}

}  // namespace

double conditionNumber(const Eigen::MatrixXd& sym) {
  if (sym.rows() != sym.cols() || sym.rows() == 0)
    throw InvalidInput("conditionNumber: square non-empty matrix required");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("conditionNumber: eigensolver failed");
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (hi <= 0.0 || lo < 1e-12 * hi) return kInf;
  return hi / lo;
}

double conditionNumber(const AutocovMatrix& sigma) { return conditionNumber(sigma.dense()); }

Eigen::MatrixXd autocorrelation(const AutocovMatrix& sigma) {
  const Eigen::VectorXd s = sigma.dense().diagonal().cwiseSqrt().cwiseInverse();
  return s.asDiagonal() * sigma.dense() * s.asDiagonal();
}

double autocorrelationCondition(const AutocovMatrix& sigma) {
  return conditionNumber(autocorrelation(sigma));
}

void BoundReport::settle() {
  holds = lhs <= value + 1e-9 * (1.0 + std::abs(value));
  slack = value - lhs;
}

std::string toString(BoundName name) {
  switch (name) {
    case BoundName::prop1: return "prop1";
    case BoundName::cor2: return "cor2";
    case BoundName::schurTight: return "schurTight";
    case BoundName::thm1: return "thm1";
  }
  return "?";
}

BoundReport prop1Bound(const ModelPair& pair, int omega, int component) {
  const InterventionSpec spec = InterventionSpec::averaged(omega, {component});
  const double s = statRisk(pair, omega).sum();
  const double g = causalRisk(pair, spec).sum();
  const double kappa = conditionNumber(pair.sigma());
  const double sigma2 = pair.truth().noiseVariance();

  BoundReport r;
  r.name = BoundName::prop1;
  r.lhs = std::abs(g - s);
  r.value = scaled(2.0 * kappa - 1.0, s - pair.dim() * sigma2);
  r.inputs = {{"kappa", kappa}, {"sigma2", sigma2}, {"S", s}, {"G", g},
              {"nu", pair.nu()}, {"omega", omega}, {"component", component + 1}};
  r.settle();
  return r;
}

BoundReport cor2Bound(const ModelPair& pair, int omega, double kp) {
  requireScalar(pair, "cor2Bound");
  const int q = pair.truth().order();
  const double k = kp > 0.0 ? kp : 4.0 * std::pow(static_cast<double>(q), q);
  const double delta = pair.truthModulus();
  const int nu = pair.nu();
  const double s = statRisk(pair, omega)(0);
  const double g = causalRisk(pair, InterventionSpec::averaged(omega, {0}))(0);

  BoundReport r;
  r.name = BoundName::cor2;
  r.lhs = std::abs(g - s);
  r.value = k * s * nu * std::pow(1.0 + delta, 2 * nu) / (1.0 - delta * delta);
  r.inputs = {{"K_p", k}, {"delta", delta}, {"nu", nu}, {"S", s}, {"omega", omega}};
  r.settle();
  return r;
}

double schurTightConstant(int p, int q, int omega) {
  return 2.0 * (binomial(omega + q - 1, q - 1) + binomial(omega + p - 1, p - 1));
}

BoundReport schurTightBound(const ModelPair& pair, int omega, double kpq) {
  requireScalar(pair, "schurTightBound");
  const int nu = pair.nu();
  const int p = pair.fitted().order();
  const int q = pair.truth().order();
  const double k = kpq > 0.0 ? kpq : schurTightConstant(p, q, omega);
  const double delta = pair.truthModulus();
  const double deltaHat = spectrum(buildCompanion(pair.fitted())).maxModulus;

  bool usedPowers = false;
  const Eigen::VectorXd s = hookValues(pair.truthCompanion(), omega, usedPowers);
  const Eigen::VectorXd sHat = hookValues(pair.fittedCompanion(), omega, usedPowers);
  double sum = 0.0;
  for (int j = 2; j <= nu; ++j)
    sum += std::abs(s(j - 2) - sHat(j - 2)) * std::abs(pair.sigma().lag(j - 1)(0, 0));

  BoundReport r;
  r.name = BoundName::schurTight;
  r.lhs = std::abs(riskDifference(pair, InterventionSpec::averaged(omega, {0})).quadForm);
  r.value = k * std::pow(std::max(delta, deltaHat), omega) * sum;
  r.inputs = {{"K_pq", k},         {"delta", delta},   {"delta_hat", deltaHat},
              {"nu", nu},          {"omega", omega},   {"schur_sum", sum},
              {"power_fallback", usedPowers ? 1.0 : 0.0}};
  r.settle();
  return r;
}

BlockScheme BlockScheme::make(int mu, int m) {
  if (mu < 1 || m < 1) throw InvalidInput("block scheme: mu and m must be positive");
  return BlockScheme{2 * mu * m, mu, m, false};
}

BlockScheme BlockScheme::standard(int n, double rho, double confidence) {
  if (n < 2) throw InvalidInput("block scheme: need at least two samples");
  int m = std::max(1, static_cast<int>(std::ceil(std::log(static_cast<double>(n)))));
  m = std::min(m, n / 2);
  BlockScheme s = make(n / (2 * m), m);
  while (s.mu > 1 && s.adjustedConfidence(rho, confidence) <= 0.0) {
    s = make(n / (2 * (s.m + 1)), s.m + 1);
    s.fallback = true;
  }
  return s;
}

double BlockScheme::adjustedConfidence(double rho, double confidence) const {
  return confidence - 2.0 * (mu - 1) * std::pow(rho, m);
}

BlockSample blockRegressors(const SamplePath& path, const BlockScheme& scheme, int p, int omega,
                            int component) {
  const int d = path.dim();
  if (component < 0 || component >= d) throw InvalidInput("blockRegressors: bad component");
  const int rows = path.length() - p - omega + 1;
  if (scheme.n > rows)
    throw InvalidInput("blockRegressors: scheme needs " + std::to_string(scheme.n) +
                       " design rows, path provides " + std::to_string(std::max(rows, 0)));
  const auto regressor = [&](int r) {
    const int e = r + p - 1;  // window ends at x_e, target x_{e+omega}
    Eigen::VectorXd z(static_cast<Eigen::Index>(p) * d);
    for (int l = 0; l < p; ++l) z.segment(l * d, d) = path.values.row(e - l).transpose();
    return z;
  };
  BlockSample out;
  out.z.resize(scheme.mu, static_cast<Eigen::Index>(p) * d);
  out.y.resize(scheme.mu);
  out.rowsZ.resize(static_cast<Eigen::Index>(scheme.mu) * scheme.m, static_cast<Eigen::Index>(p) * d);
  out.rowsY.resize(static_cast<Eigen::Index>(scheme.mu) * scheme.m);
  for (int j = 0; j < scheme.mu; ++j) {
    for (int i = 0; i < scheme.m; ++i) {
      const int r = 2 * j * scheme.m + i;
      const Eigen::Index row = static_cast<Eigen::Index>(j) * scheme.m + i;
      out.rowsZ.row(row) = regressor(r).transpose();
      out.rowsY(row) = path.values(r + p - 1 + omega, component);
    }
    out.z.row(j) = out.rowsZ.row(static_cast<Eigen::Index>(j) * scheme.m + scheme.m - 1);
    out.y(j) = out.rowsY(static_cast<Eigen::Index>(j) * scheme.m + scheme.m - 1);
  }
  return out;
}

double rademacherEstimate(const Eigen::MatrixXd& z, double radius, double truncation,
                          std::uint64_t seed, int draws) {
  if (radius <= 0.0) throw InvalidInput("rademacherEstimate: radius must be positive");
  if (draws < 1) throw InvalidInput("rademacherEstimate: draws must be positive");
  const Eigen::Index mu = z.rows();
  if (mu == 0) throw InvalidInput("rademacherEstimate: no blocks");
  Rng rng = makeRng(seed);
  std::bernoulli_distribution coin(0.5);
  Eigen::VectorXd sum(z.cols());
  double total = 0.0;
  for (int r = 0; r < draws; ++r) {
    sum.setZero();
    for (Eigen::Index j = 0; j < mu; ++j) sum += (coin(rng) ? 1.0 : -1.0) * z.row(j).transpose();
    total += sum.norm();
  }
  return 4.0 * std::sqrt(truncation) * radius / static_cast<double>(mu) * (total / draws);
}

double defaultTruncation(const VarModel& fitted, const SamplePath& path, int omega, int component) {
  std::vector<double> errs = squaredErrors(fitted, path, omega, component);
  const std::size_t k = static_cast<std::size_t>(
      std::ceil(0.999 * static_cast<double>(errs.size()))) - 1;
  std::nth_element(errs.begin(), errs.begin() + static_cast<std::ptrdiff_t>(k), errs.end());
  return errs[k];
}

BoundReport thm1Bound(const ModelPair& pair, const SamplePath& path, const BlockScheme& scheme,
                      const Thm1Options& o) {
  const VarModel& fitted = pair.fitted();
  const int p = fitted.order();
  const double kappa = o.kappa > 0.0 ? o.kappa : conditionNumber(pair.sigma());
  const double m = o.truncation > 0.0 ? o.truncation
                                      : defaultTruncation(fitted, path, o.omega, o.component);
  const double rho = o.rho > 0.0 ? o.rho : pair.truthModulus();
  if (!(rho < 1.0)) throw InvalidInput("thm1Bound: rho must lie in (0, 1)");
  const double deltaPrime = scheme.adjustedConfidence(rho, o.confidence);
  if (deltaPrime <= 0.0)
    throw InvalidInput("thm1Bound: delta' = " + std::to_string(deltaPrime) +
                       " <= 0 for mu=" + std::to_string(scheme.mu) + ", m=" + std::to_string(scheme.m));

  const Eigen::RowVectorXd w = matrixPower(buildCompanion(fitted), o.omega).row(o.component);
  const double radius = o.radius > 0.0 ? o.radius : std::max(w.norm(), 1e-12);
  const BlockSample sample = blockRegressors(path, scheme, p, o.omega, o.component);
  const Eigen::VectorXd resid = sample.rowsY - sample.rowsZ * w.transpose();
  const double sHat = resid.array().square().min(m).mean();
  const double rHat = rademacherEstimate(sample.z, radius, m, o.seed, o.rademacherDraws);
  const double zeta = 2.0 * kappa;
  const double conf = 3.0 * zeta * m * std::sqrt(std::log(4.0 / deltaPrime) / (2.0 * scheme.mu));

  BoundReport r;
  r.name = BoundName::thm1;
  r.lhs = causalRisk(pair, InterventionSpec::averaged(o.omega, {o.component}))(o.component);
  r.value = zeta * sHat + zeta * rHat + conf;
  r.inputs = {{"kappa", kappa},       {"zeta", zeta},         {"M", m},
              {"rho", rho},           {"mu", scheme.mu},      {"m", scheme.m},
              {"n", scheme.n},        {"delta_conf", o.confidence},
              {"delta_prime", deltaPrime}, {"S_hat", sHat},   {"R_hat", rHat},
              {"B", radius},          {"omega", o.omega}};
  r.settle();
  return r;
}

SpectralBoundCheck spectralBoundCheck(const VarModel& ar, int n) {
  if (ar.dim() != 1) throw InvalidInput("spectralBoundCheck: scalar processes only");
  if (n < 1) throw InvalidInput("spectralBoundCheck: n must be positive");
  const int p = ar.order();
  const double sigma2 = ar.noiseVariance();
  SpectralBoundCheck c;
  c.delta = isStationary(ar).spectrum.maxModulus;
  if (!(c.delta < 1.0)) throw NonStationaryError("spectralBoundCheck: unstable process", c.delta);
  const AutocovMatrix sigma = exactAutocov(ar, n);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma.dense(), Eigen::EigenvaluesOnly);
  const double pp = std::pow(static_cast<double>(p), p);
  const double tail = 1.0 - c.delta * c.delta;
  c.lambdaMin = es.eigenvalues().minCoeff();
  c.lambdaMax = es.eigenvalues().maxCoeff();
  c.lambdaMinBound = sigma2 / std::pow(1.0 + c.delta, 2 * p);
  c.lambdaMaxBound = 2.0 * pp * n * sigma2 / tail;
  const auto tol = [](double v) { return 1e-9 * (1.0 + std::abs(v)); };
  c.lambdaMinHolds = c.lambdaMin >= c.lambdaMinBound - tol(c.lambdaMinBound);
  c.lambdaMaxHolds = c.lambdaMax <= c.lambdaMaxBound + tol(c.lambdaMaxBound);
  for (int k = 0; k < n; ++k) {
    const double g = std::abs(sigma.lag(k)(0, 0));
    const double bound = pp * sigma2 * std::pow(c.delta, k) / tail;
    const double ratio = bound > 0.0 ? g / bound : (g > 1e-300 ? kInf : 0.0);
    if (ratio > c.worstGammaRatio) {
      c.worstGammaRatio = ratio;
      c.worstGammaLag = k;
    }
    if (g > bound + tol(bound)) c.gammaHolds = false;
  }
  return c;
}

}  // namespace causalvar
