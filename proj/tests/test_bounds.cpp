#include <doctest.h>

#include <cmath>
#include <random>

#include "causalvar/bounds.hpp"
#include "causalvar/estimators.hpp"
#include "oracles.hpp"

using namespace causalvar;
using doctest::Approx;

namespace {

VarModel perturb(const VarModel& m, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Eigen::MatrixXd> blocks = m.coeffs();
  for (auto& b : blocks)
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] += u(rng);
  return VarModel(blocks, m.noiseVariance());
}

AutocovMatrix scalarSigma(std::initializer_list<double> gammas) {
  std::vector<Eigen::MatrixXd> lags;
  for (double g : gammas) lags.push_back(Eigen::MatrixXd::Constant(1, 1, g));
  return AutocovMatrix(std::move(lags));
}

}  // namespace

TEST_CASE("condition number") {
  CHECK(conditionNumber(Eigen::MatrixXd::Identity(4, 4)) == Approx(1.0));
  CHECK(conditionNumber(scalarSigma({1.0, 5.0 / 7.0})) == Approx(6.0).epsilon(1e-12));
  CHECK(std::isinf(conditionNumber(scalarSigma({1.0, 1.0}))));
  const AutocovMatrix s = exactAutocov(VarModel::scalar({0.5, 0.3}), 2);
  CHECK(conditionNumber(s) == Approx(6.0).epsilon(1e-10));
  CHECK(autocorrelationCondition(s) == Approx(6.0).epsilon(1e-10));
  CHECK(autocorrelation(s)(0, 0) == Approx(1.0));

  double prev = 0;
  for (double gap : {0.3, 0.1, 0.03, 0.01, 0.001}) {
    const double a2 = 0.2;
    const double k = conditionNumber(exactAutocov(VarModel::scalar({1 - a2 - gap, a2}), 2));
    CHECK(k > prev);
    prev = k;
  }
  CHECK(prev > 1000);
}

TEST_CASE("condition-number bound examples") {
  const ModelPair same(VarModel::scalar({0.5, 0.3}), VarModel::scalar({0.5, 0.3}));
  const BoundReport r = prop1Bound(same, 1, 0);
  CHECK(r.lhs == 0.0);
  CHECK(r.value == Approx(0.0).scale(1.0));
  CHECK(r.holds);

  const ModelPair ar1(VarModel::scalar({0.5}), VarModel::scalar({0.8}));
  const BoundReport a = prop1Bound(ar1, 2, 0);
  CHECK(a.lhs == Approx(0.0).scale(1.0));
  CHECK(a.holds);
  CHECK(a.slack == Approx(a.value - a.lhs));
  CHECK(a.inputs.count("kappa") == 1);
}

TEST_CASE("bound report tolerance") {
  BoundReport r;
  r.value = 1.0;
  r.lhs = 1.0 + 1e-9;
  r.settle();
  CHECK(r.holds);
  r.lhs = 1.0 + 3e-9;
  r.settle();
  CHECK_FALSE(r.holds);
  CHECK(toString(BoundName::schurTight) == "schurTight");
}

TEST_CASE("condition-number bound tightness") {
  for (double kappa = 2.0; kappa <= 100.0; kappa *= 1.25) {
    const double rho = (kappa - 1) / (kappa + 1);
    const double a2 = 0.2, a1 = rho * (1 - a2);
    const VarModel truth = VarModel::scalar({a1, a2});
    const AutocovMatrix s = exactAutocov(truth, 2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s.dense());
    const Eigen::VectorXd u = 0.05 * es.eigenvectors().col(0);
    const ModelPair pair(truth, VarModel::scalar({a1 + u(0), a2 + u(1)}));
    const double k = conditionNumber(s);
    CHECK(k == Approx(kappa).epsilon(1e-8));
    const BoundReport r = prop1Bound(pair, 1, 0);
    const double sr = statRisk(pair, 1)(0);
    const double ratio = r.lhs / (sr - 1.0);
    CHECK(ratio >= 0.9 * (k - 1) / 2);
    CHECK(ratio == Approx((k - 1) / 2).epsilon(1e-6));
    CHECK(r.holds);
  }
}

TEST_CASE("condition-number bound holds on random estimator fits") {
  int violations = 0, total = 0;
  const EstimatorKind kinds[] = {EstimatorKind::ols, EstimatorKind::ridge, EstimatorKind::lasso,
                                 EstimatorKind::elasticNet};
  for (int trial = 0; trial < 200; ++trial) {
    const int q = 1 + trial % 7, p = 1 + (trial / 7) % 7;
    const VarModel truth = rejectionSampleStable(q, 1, -1, 1, 40000 + trial, 1000000);
    const SamplePath path = simulate(truth, 60, 50000 + trial);
    const LaggedDesign design = buildDesign(path, p);
    const EstimatorKind kind = kinds[trial % 4];
    const VarModel fitted = kind == EstimatorKind::ols ? fitOLS(design).model
                                                       : fitRegularized(design, kind, 0.05, 0.5).model;
    for (const VarModel& f : {fitted, perturb(truth, 0.3, 60000 + static_cast<std::uint64_t>(trial))}) {
      const ModelPair pair(truth, f);
      for (int omega = 1; omega <= 10; omega += 3) {
        ++total;
        violations += !prop1Bound(pair, omega, 0).holds;
      }
    }
  }
  CHECK(violations == 0);
  CHECK(total == 1600);

  const VarModel vtruth = rejectionSampleStable(2, 2, -0.6, 0.6, 3, 1000000);
  for (int trial = 0; trial < 50; ++trial) {
    const ModelPair pair(vtruth, perturb(vtruth, 0.2, static_cast<std::uint64_t>(trial)));
    for (int comp = 0; comp < 2; ++comp) CHECK(prop1Bound(pair, 1 + trial % 4, comp).holds);
  }
}

TEST_CASE("stability-parameter bound") {
  const ModelPair same(VarModel::scalar({0.5, 0.3}), VarModel::scalar({0.5, 0.3}));
  CHECK(cor2Bound(same, 1).holds);
  CHECK(cor2Bound(same, 1).inputs.at("K_p") == Approx(4.0 * 4.0));

  double prev = 0;
  for (double a : {0.5, 0.9, 0.99, 0.999}) {
    const BoundReport r = cor2Bound(ModelPair(VarModel::scalar({a}), VarModel::scalar({a - 0.1})), 1);
    CHECK(r.value > prev);
    prev = r.value;
  }
  CHECK(prev > 1000);

  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int p = 1 + trial % 5, q = 1 + (trial / 5) % 5;
    const VarModel truth = rejectionSampleStable(q, 1, -1, 1, 70000 + trial, 1000000);
    const VarModel fitted = rejectionSampleStable(p, 1, -1, 1, 80000 + trial, 1000000);
    const ModelPair pair(truth, fitted);
    const int omega = 1 + trial % 4;
    violations += !cor2Bound(pair, omega).holds;
    const BoundReport t = schurTightBound(pair, omega);
    CHECK(t.holds);
  }
  CHECK(violations == 0);
  CHECK_THROWS_AS(cor2Bound(ModelPair(VarModel({Eigen::Matrix2d::Identity() * 0.5}, 1.0),
                                      VarModel({Eigen::Matrix2d::Identity() * 0.4}, 1.0)),
                            1),
                  InvalidInput);
}

TEST_CASE("tight Schur bound") {
  CHECK(schurTightConstant(2, 2, 1) == Approx(2 * (2 + 2)));
  CHECK(schurTightConstant(1, 1, 5) == Approx(4.0));

  const ModelPair same(VarModel::scalar({0.5, 0.3}), VarModel::scalar({0.5, 0.3}));
  CHECK(schurTightBound(same, 2).value == Approx(0.0).scale(1.0));

  double prevTight = 1e300;
  for (double a2 : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const ModelPair low(VarModel::scalar({0.95 - a2, a2}), VarModel::scalar({0.9, -a2}));
    const BoundReport t = schurTightBound(low, 1);
    const BoundReport c = cor2Bound(low, 1);
    CHECK(t.holds);
    CHECK(t.value < prevTight);
    CHECK(c.value > 100);
    CHECK(conditionNumber(low.sigma()) > 30);
    prevTight = t.value;
    MESSAGE("a2 = " << a2 << ": schurTight = " << t.value << ", cor2 = " << c.value);
  }
  CHECK(prevTight < 1e-3);

  const ModelPair mono(VarModel::scalar({0.7, -0.1}), VarModel::scalar({0.6, -0.05}));
  double prevValue = schurTightBound(mono, 1).value;
  for (int omega = 2; omega <= 60; ++omega) {
    const double v = schurTightBound(mono, omega).value;
    CHECK(v <= prevValue);
    prevValue = v;
  }
  CHECK(prevValue < 1e-20);

  // Differences of hook values oscillate, so decay is monotone only eventually here.
  const ModelPair pair(VarModel::scalar({0.5, 0.3}), VarModel::scalar({0.4, 0.35}));
  const double dmax = std::max(pair.truthModulus(), spectrum(pair.fittedCompanion()).maxModulus);
  prevValue = schurTightBound(pair, 10).value;
  double ratio = 0;
  for (int omega = 11; omega <= 80; ++omega) {
    const double v = schurTightBound(pair, omega).value;
    CHECK(v <= prevValue);
    ratio = v / prevValue;
    prevValue = v;
  }
  CHECK(prevValue < 1e-8);
  CHECK(ratio <= dmax);

  const ModelPair degenerate(VarModel::scalar({0.5, 0.0, 0.0}), VarModel::scalar({0.4, 0.1}));
  const BoundReport f = schurTightBound(degenerate, 2);
  CHECK(f.inputs.at("power_fallback") == 1.0);
  CHECK(f.holds);
}

TEST_CASE("block schemes") {
  const BlockScheme s = BlockScheme::standard(1000, 0.1, 0.05);
  CHECK(2 * s.mu * s.m == s.n);
  CHECK(s.n <= 1000);
  CHECK(s.m == static_cast<int>(std::ceil(std::log(1000.0))));
  CHECK_FALSE(s.fallback);
  const BlockScheme slow = BlockScheme::standard(1000, 0.5, 0.05);
  CHECK(slow.fallback);
  CHECK(slow.m > s.m);
  CHECK(2 * slow.mu * slow.m == slow.n);
  CHECK(slow.adjustedConfidence(0.5, 0.05) > 0);

  const BlockScheme iid = BlockScheme::make(50, 1);
  CHECK(iid.n == 100);
  CHECK(iid.adjustedConfidence(0.0, 0.05) == Approx(0.05));
  CHECK(iid.adjustedConfidence(1e-12, 0.05) == Approx(0.05));

  double prev = -1e300;
  for (int m = 1; m <= 20; ++m) {
    const BlockScheme b = BlockScheme::make(400 / (2 * m) > 0 ? 400 / (2 * m) : 1, m);
    const double dp = b.adjustedConfidence(0.6, 0.05);
    CHECK(dp >= prev - 1e-15);
    CHECK(dp <= 0.05);
    prev = dp;
  }
  CHECK_THROWS_AS(BlockScheme::make(0, 3), InvalidInput);
  const BlockScheme fb = BlockScheme::standard(200, 0.95, 0.05);
  CHECK(fb.adjustedConfidence(0.95, 0.05) > 0);
}

TEST_CASE("block regressors") {
  SamplePath path;
  path.values.resize(24, 1);
  for (int t = 0; t < 24; ++t) path.values(t, 0) = t;
  const BlockScheme s = BlockScheme::make(2, 5);
  const BlockSample b = blockRegressors(path, s, 2, 1, 0);
  CHECK(b.z.rows() == 2);
  CHECK(b.z.cols() == 2);
  CHECK(b.rowsZ.rows() + 0 >= b.z.rows());
  for (int j = 0; j < 2; ++j) CHECK(b.y(j) - b.z(j, 0) == Approx(1.0));
  CHECK(b.z(1, 0) - b.z(0, 0) == Approx(10.0));
  CHECK(b.rowsZ.rows() == 10);
  CHECK_THROWS_AS(blockRegressors(path, BlockScheme::make(3, 4), 2, 1, 0), InvalidInput);
  CHECK(b.z(0, 0) - b.z(0, 1) == Approx(1.0));
}

TEST_CASE("Rademacher estimate") {
  CHECK(rademacherEstimate(Eigen::MatrixXd::Zero(10, 3), 1.0, 4.0, 1, 50) == 0.0);

  Eigen::MatrixXd one(1, 3);
  one << 1.0, 2.0, 2.0;
  const double expected = 4.0 * std::sqrt(9.0) * 1.5 * 3.0;
  CHECK(rademacherEstimate(one, 1.5, 9.0, 1, 10) == Approx(expected));
  CHECK(rademacherEstimate(one, 1.5, 9.0, 77, 3) == Approx(expected));

  const SamplePath path = simulate(VarModel::scalar({0.5, 0.3}), 20000, 4);
  std::vector<double> lx, ly;
  for (int mu : {10, 40, 160}) {
    const BlockSample b = blockRegressors(path, BlockScheme::make(mu, 20000 / (2 * mu) > 5 ? 5 : 1), 2, 1, 0);
    const double r = rademacherEstimate(b.z, 1.0, 4.0, 9, 2000);
    CHECK(r > 0);
    lx.push_back(std::log(mu));
    ly.push_back(std::log(r));
  }
  const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
  double num = 0, den = 0;
  for (int i = 0; i < 3; ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = num / den;
  CHECK(slope == Approx(-0.5).epsilon(0.3));
  CHECK(std::abs(slope + 0.5) <= 0.15);

  const BlockSample b = blockRegressors(path, BlockScheme::make(50, 5), 2, 1, 0);
  double prev = 0;
  for (double radius : {0.1, 0.5, 1.0, 4.0}) {
    const double r = rademacherEstimate(b.z, radius, 4.0, 3, 200);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("finite-sample bound") {
  const VarModel truth = VarModel::scalar({0.5, 0.3});
  const SamplePath train = simulate(truth, 2000, 11);
  const LaggedDesign design = buildDesign(train, 2);
  const ModelPair pair(truth, fitOLS(design).model);
  const SamplePath eval = simulate(truth, 4000, 12);
  Thm1Options opts;
  opts.seed = 5;
  const BlockScheme scheme = BlockScheme::standard(eval.length() - 2, pair.truthModulus(), opts.confidence);
  const BoundReport r = thm1Bound(pair, eval, scheme, opts);
  CHECK(r.holds);
  CHECK(r.lhs == Approx(causalRisk(pair, InterventionSpec::averaged(1, {0}))(0)));
  for (const char* key : {"kappa", "M", "rho", "mu", "m", "delta_prime", "S_hat", "R_hat", "zeta", "B"})
    CHECK(r.inputs.count(key) == 1);
  CHECK(r.inputs.at("zeta") == Approx(2 * conditionNumber(pair.sigma())));

  Thm1Options bad = opts;
  bad.rho = 0.99;
  bad.confidence = 0.01;
  CHECK_THROWS_AS(thm1Bound(pair, eval, BlockScheme::make(100, 2), bad), InvalidInput);

  Thm1Options iid = opts;
  iid.rho = 1e-300;
  const BoundReport ri = thm1Bound(pair, eval, BlockScheme::make((eval.length() - 4) / 2, 1), iid);
  CHECK(ri.inputs.at("delta_prime") == Approx(iid.confidence));

  for (int trial = 0; trial < 30; ++trial) {
    const int q = 1 + trial % 5;
    const VarModel t = rejectionSampleStable(q, 1, -1, 1, 300 + trial, 1000000);
    const SamplePath tr = simulate(t, 200, 400 + trial);
    const ModelPair pr(t, fitOLS(buildDesign(tr, q)).model);
    const SamplePath ev = simulate(t, 2000, 500 + trial);
    Thm1Options o;
    o.seed = static_cast<std::uint64_t>(trial);
    o.rho = pr.truthModulus();
    const BlockScheme sc = BlockScheme::standard(ev.length() - q, o.rho, o.confidence);
    CHECK(thm1Bound(pr, ev, sc, o).holds);
  }
}

TEST_CASE("spectral bounds") {
  int lminViolations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int p = 1 + trial % 7, n = 1 + (trial / 7) % 10;
    const VarModel m = rejectionSampleStable(p, 1, -2, 2, 90000 + trial, 10000000);
    lminViolations += !spectralBoundCheck(m, n).lambdaMinHolds;
  }
  CHECK(lminViolations == 0);

  // Roots 0.9 and 0.85: the lag-9 autocovariance exceeds p^p sigma^2 delta^k / (1 - delta^2).
  const SpectralBoundCheck c = spectralBoundCheck(VarModel::scalar({1.75, -0.765}), 10);
  CHECK(c.delta == Approx(0.9));
  CHECK(c.lambdaMinHolds);
  CHECK_FALSE(c.gammaHolds);
  CHECK(c.worstGammaRatio > 10);
  const std::vector<double> g = oracle::autocov({1.75, -0.765}, 1.0, 10, 200000);
  CHECK(g[9] > 4.0 * std::pow(0.9, 9) / (1 - 0.81));
}
