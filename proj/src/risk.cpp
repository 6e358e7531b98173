#include "causalvar/risk.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "causalvar/error.hpp"
#include "causalvar/parallel.hpp"
#include "causalvar/seeding.hpp"

namespace causalvar {

namespace {

void requireOmega(int omega) {
  if (omega < 1) throw InvalidInput("omega must be >= 1");
}

void requireComponent(int component, int d) {
  if (component < 0 || component >= d)
    throw InvalidInput("component " + std::to_string(component + 1) + " outside [1," +
                       std::to_string(d) + "]");
}

// Top d rows of the omega-th companion power, i.e. the omega-step plug-in
// predictor acting on the stacked window.
Eigen::MatrixXd predictorRows(const VarModel& model, int omega, int order = 0) {
  const CompanionMatrix c = buildCompanion(model, order);
  return matrixPower(c, omega).topRows(model.dim());
}

Eigen::VectorXd marginalSd(const VarModel& truth) {
  return exactAutocovLags(truth, 1).front().diagonal().cwiseSqrt();
}

}  // namespace

ModelPair::ModelPair(VarModel truth, VarModel fitted)
    : truth_(std::move(truth)), fitted_(std::move(fitted)) {
  if (truth_.dim() != fitted_.dim())
    throw InvalidInput("model pair: truth has d=" + std::to_string(truth_.dim()) +
                       ", fitted has d=" + std::to_string(fitted_.dim()));
  const StationarityCheck check = isStationary(truth_);
  if (!check.stationary)
    throw NonStationaryError("model pair: truth is not stationary (max |lambda| = " +
                                 std::to_string(check.spectrum.maxModulus) + ")",
                             check.spectrum.maxModulus);
  delta_ = check.spectrum.maxModulus;
  nu_ = std::max(truth_.order(), fitted_.order());
  a_ = buildCompanion(truth_, nu_);
  ahat_ = buildCompanion(fitted_, nu_);
  sigma_ = exactAutocov(truth_, nu_);
}

Eigen::MatrixXd ModelPair::powerGap(int omega) const {
  requireOmega(omega);
  const int d = dim();
  return matrixPower(a_, omega).topRows(d) - matrixPower(ahat_, omega).topRows(d);
}

Eigen::VectorXd noiseFloor(const VarModel& truth, int omega) {
  requireOmega(omega);
  const int d = truth.dim();
  const Eigen::MatrixXd c = buildCompanion(truth).dense;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(c.rows(), c.cols());
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < omega; ++j) {
    acc += power.topLeftCorner(d, d).rowwise().squaredNorm();
    if (j + 1 < omega) power = c * power;
  }
  return truth.noiseVariance() * acc;
}

double noiseFloor(const VarModel& truth, int omega, int component) {
  requireComponent(component, truth.dim());
  return noiseFloor(truth, omega)(component);
}

Eigen::VectorXd statRisk(const ModelPair& pair, int omega) {
  const Eigen::MatrixXd delta = pair.powerGap(omega);
  const Eigen::MatrixXd& sigma = pair.sigma().dense();
  return (delta * sigma).cwiseProduct(delta).rowwise().sum() + noiseFloor(pair.truth(), omega);
}

Eigen::VectorXd causalRisk(const ModelPair& pair, const InterventionSpec& spec) {
  spec.validate(pair.dim());
  if (spec.steps > pair.nu())
    throw InvalidInput("causalRisk: intervention spans more steps than the window of size nu");
  const Eigen::MatrixXd delta = pair.powerGap(spec.omega);
  const Eigen::VectorXd floor = noiseFloor(pair.truth(), spec.omega);
  if (spec.kind == InterventionKind::relativeShift) {
    Eigen::VectorXd shifted = Eigen::VectorXd::Zero(delta.rows());
    for (int c : spec.components) shifted += delta.col(c);
    const Eigen::VectorXd base = (delta * pair.sigma().dense()).cwiseProduct(delta).rowwise().sum();
    return base + spec.alpha * spec.alpha * shifted.cwiseAbs2() + floor;
  }
  const Eigen::MatrixXd gamma = interventionalCov(pair.sigma(), spec).dense;
  return (delta * gamma).cwiseProduct(delta).rowwise().sum() + floor;
}

RiskDifference riskDifference(const ModelPair& pair, const InterventionSpec& spec) {
  if (spec.kind != InterventionKind::atomicAveraged)
    throw InvalidInput("riskDifference: requires an atomicAveraged intervention");
  spec.validate(pair.dim());
  const Eigen::MatrixXd delta = pair.powerGap(spec.omega);
  const Eigen::MatrixXd& sigma = pair.sigma().dense();
  const Eigen::MatrixXd gamma = interventionalCov(pair.sigma(), spec).dense;
  const std::vector<int> idx = intervenedIndices(spec, pair.dim());
  std::vector<char> hit(static_cast<std::size_t>(sigma.rows()), 0);
  for (int i : idx) hit[static_cast<std::size_t>(i)] = 1;

  RiskDifference out;
  out.perOutput.resize(delta.rows());
  for (Eigen::Index r = 0; r < delta.rows(); ++r) {
    const Eigen::RowVectorXd dr = delta.row(r);
    out.perOutput(r) = dr * (gamma - sigma) * dr.transpose();
    double cross = 0.0;
    for (int a : idx) {
      for (Eigen::Index k = 0; k < sigma.rows(); ++k) {
        if (k == a) continue;
        // Pairs with both ends intervened appear twice in the sweep over a.
        const double w = hit[static_cast<std::size_t>(k)] ? 1.0 : 2.0;
        cross += w * dr(a) * dr(k) * sigma(a, k);
      }
    }
    out.expansion -= cross;
  }
  out.quadForm = out.perOutput.sum();
  if (idx.size() == 1) {
    const int c = idx.front();
    const Eigen::RowVectorXd dr = delta.row(c);
    double s = 0.0;
    for (Eigen::Index k = 0; k < sigma.rows(); ++k)
      if (k != c) s += dr(k) * sigma(c, k);
    out.singleRow = 2.0 * std::abs(dr(c) * s);
  }
  return out;
}

double riskQuotient(const ModelPair& pair) {
  if (pair.dim() != 1) throw InvalidInput("riskQuotient: scalar processes only");
  const Eigen::RowVectorXd delta = pair.powerGap(1).row(0);
  const double gamma0 = pair.sigma().lag(0)(0, 0);
  const Eigen::MatrixXd r = pair.sigma().dense() / gamma0;
  const double s2 = pair.truth().noiseVariance() / gamma0;
  return (delta.squaredNorm() + s2) / (delta * r * delta.transpose() + s2);
}

double relativeShiftGap(const ModelPair& pair, int omega, double alpha) {
  if (pair.dim() != 1) throw InvalidInput("relativeShiftGap: scalar processes only");
  const double g = pair.powerGap(omega)(0, 0);
  return g * g * alpha * alpha;
}

void Accumulator::add(double v) noexcept {
  ++n_;
  const double d = v - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (v - mean_);
}

void Accumulator::merge(const Accumulator& o) noexcept {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double n = static_cast<double>(n_ + o.n_);
  const double d = o.mean_ - mean_;
  mean_ += d * static_cast<double>(o.n_) / n;
  m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
  n_ += o.n_;
}

Estimate Accumulator::estimate() const noexcept {
  Estimate e;
  e.count = n_;
  e.mean = mean_;
  if (n_ > 1) e.stdErr = std::sqrt(m2_ / static_cast<double>(n_ - 1) / static_cast<double>(n_));
  return e;
}

Estimate empiricalStatRisk(const VarModel& fitted, const SamplePath& path, int omega,
                           int component) {
  requireOmega(omega);
  const int d = fitted.dim();
  const int p = fitted.order();
  requireComponent(component, d);
  if (path.dim() != d) throw InvalidInput("empiricalStatRisk: path dimension mismatch");
  if (path.length() <= p + omega)
    throw InvalidInput("empiricalStatRisk: path of length " + std::to_string(path.length()) +
                       " too short for p + omega = " + std::to_string(p + omega));
  const Eigen::RowVectorXd w = predictorRows(fitted, omega).row(component);
  const Eigen::MatrixXd& x = path.values;
  Accumulator acc;
  for (int e = p - 1; e + omega < path.length(); ++e) {
    double pred = 0.0;
    for (int l = 0; l < p; ++l) pred += w.segment(l * d, d).dot(x.row(e - l));
    const double err = x(e + omega, component) - pred;
    acc.add(err * err);
  }
  return acc.estimate();
}

Estimate empiricalCausalRisk(const VarModel& truth, const VarModel& fitted, const SamplePath& path,
                             const InterventionSpec& spec, int draws, std::uint64_t seed,
                             int component) {
  const int d = truth.dim();
  if (fitted.dim() != d || path.dim() != d)
    throw InvalidInput("empiricalCausalRisk: dimension mismatch");
  requireComponent(component, d);
  spec.validate(d);
  if (spec.kind == InterventionKind::atomicFixed)
    throw InvalidInput("empiricalCausalRisk: averaged or relative interventions only");
  if (draws < 1) throw InvalidInput("empiricalCausalRisk: draws must be positive");
  const int len = std::max({truth.order(), fitted.order(), spec.steps});
  const int omega = spec.omega;
  if (path.length() <= len + omega)
    throw InvalidInput("empiricalCausalRisk: path too short");

  const Eigen::RowVectorXd w = predictorRows(fitted, omega, len).row(component);
  const Eigen::VectorXd sd = marginalSd(truth);
  Accumulator acc;
  Eigen::VectorXd window(static_cast<Eigen::Index>(len) * d);
  for (int e = len - 1; e + omega < path.length(); ++e) {
    Rng rng = makeRng(deriveSeed(seed, {static_cast<std::uint64_t>(e)}));
    for (int r = 0; r < draws; ++r) {
      for (int b = 0; b < len; ++b) window.segment(b * d, d) = path.values.row(e - b).transpose();
      const Eigen::MatrixXd innovations = drawInnovations(truth, omega, rng);
      applySurgery(window, spec, d, sd, rng);
      const double target = propagateWindow(truth, window, innovations)(component);
      const double err = target - w.dot(window);
      acc.add(err * err);
    }
  }
  return acc.estimate();
}

MonteCarloRisk monteCarloRisks(const ModelPair& pair, const InterventionSpec& spec, int component,
                               std::int64_t draws, std::uint64_t seed, int threads,
                               const Eigen::MatrixXd& marginalPool) {
  const int d = pair.dim();
  requireComponent(component, d);
  spec.validate(d);
  if (spec.steps > pair.nu())
    throw InvalidInput("monteCarloRisks: intervention spans more steps than the window");
  if (draws < 1) throw InvalidInput("monteCarloRisks: draws must be positive");

  const Eigen::LLT<Eigen::MatrixXd> chol(pair.sigma().dense());
  if (chol.info() != Eigen::Success)
    throw NumericalError("monteCarloRisks: autocovariance matrix is not positive definite");
  const Eigen::MatrixXd lower = chol.matrixL();
  const Eigen::RowVectorXd w = predictorRows(pair.fitted(), spec.omega, pair.nu()).row(component);
  if (marginalPool.rows() > 0 && marginalPool.cols() != d)
    throw InvalidInput("monteCarloRisks: marginal pool dimension mismatch");
  const Marginal marginal{marginalSd(pair.truth()), marginalPool};
  const Eigen::Index n = lower.rows();

  constexpr std::int64_t kChunk = 1 << 15;
  const std::int64_t chunks = (draws + kChunk - 1) / kChunk;
  struct Partial {
    Accumulator s, g, gap;
  };
  std::vector<Partial> partial(static_cast<std::size_t>(chunks));
  parallelFor(static_cast<std::size_t>(chunks), threads, [&](std::size_t c) {
    Rng rng = makeRng(deriveSeed(seed, {static_cast<std::uint64_t>(c)}));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd z(n), y(n), yi(n);
    const std::int64_t begin = static_cast<std::int64_t>(c) * kChunk;
    const std::int64_t end = std::min(draws, begin + kChunk);
    Partial& out = partial[c];
    for (std::int64_t k = begin; k < end; ++k) {
      for (Eigen::Index j = 0; j < n; ++j) z(j) = gauss(rng);
      y.noalias() = lower.triangularView<Eigen::Lower>() * z;
      const Eigen::MatrixXd innovations = drawInnovations(pair.truth(), spec.omega, rng);
      yi = y;
      applySurgery(yi, spec, d, marginal, rng);
      const double es = propagateWindow(pair.truth(), y, innovations)(component) - w.dot(y);
      const double eg = propagateWindow(pair.truth(), yi, innovations)(component) - w.dot(yi);
      out.s.add(es * es);
      out.g.add(eg * eg);
      out.gap.add(eg * eg - es * es);
    }
  });
  Partial total;
  for (const Partial& p : partial) {
    total.s.merge(p.s);
    total.g.merge(p.g);
    total.gap.merge(p.gap);
  }
  return {total.s.estimate(), total.g.estimate(), total.gap.estimate()};
}

RiskReport analyticReport(const ModelPair& pair, const InterventionSpec& spec, int component) {
  const int d = pair.dim();
  requireComponent(component, d);
  spec.validate(d);
  InterventionSpec averaged = InterventionSpec::averaged(spec.omega, spec.components, spec.steps);

  RiskReport r;
  r.method = RiskMethod::analytic;
  r.omega = spec.omega;
  r.component = component;
  r.spec = spec;
  r.sOmega = statRisk(pair, spec.omega)(component);
  r.noiseFloor = noiseFloor(pair.truth(), spec.omega, component);
  r.gAvg = causalRisk(pair, averaged)(component);
  if (spec.kind == InterventionKind::atomicFixed) r.gDo = causalRisk(pair, spec)(component);
  if (spec.kind == InterventionKind::relativeShift) r.gShift = causalRisk(pair, spec)(component);
  r.diff = std::abs(r.gAvg - r.sOmega);
  r.crossTermDiff = riskDifference(pair, averaged).singleRow;
  r.quotient = r.gAvg / r.sOmega;
  if (d == 1 && spec.omega == 1) r.fullWindowQuotient = riskQuotient(pair);
  return r;
}

}  // namespace causalvar
