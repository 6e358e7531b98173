#include <doctest.h>

#include <cmath>
#include <random>

#include "causalvar/companion.hpp"
#include "causalvar/var_process.hpp"
#include "oracles.hpp"

using namespace causalvar;
using doctest::Approx;

namespace {

Eigen::VectorXcd rootsOf(const VarModel& m) { return spectrum(buildCompanion(m)).eigenvalues; }

std::vector<std::complex<double>> toStd(const Eigen::VectorXcd& v) {
  return {v.data(), v.data() + v.size()};
}

}  // namespace

TEST_CASE("companion layout") {
  CHECK(buildCompanion(VarModel::scalar({0.9})).dense(0, 0) == 0.9);

  const CompanionMatrix c = buildCompanion(VarModel::scalar({0.5, 0.3}));
  Eigen::Matrix2d expected;
  expected << 0.5, 0.3, 1.0, 0.0;
  CHECK(c.dense.isApprox(expected));

  const VarModel v({0.1 * Eigen::MatrixXd::Identity(2, 2), 0.2 * Eigen::MatrixXd::Identity(2, 2)}, 1.0);
  const CompanionMatrix cv = buildCompanion(v);
  REQUIRE(cv.size() == 4);
  CHECK(cv.dense.topLeftCorner(2, 2).isApprox(0.1 * Eigen::Matrix2d::Identity()));
  CHECK(cv.dense.topRightCorner(2, 2).isApprox(0.2 * Eigen::Matrix2d::Identity()));
  CHECK(cv.dense.bottomLeftCorner(2, 2).isApprox(Eigen::Matrix2d::Identity()));
  CHECK(cv.dense.bottomRightCorner(2, 2).isZero(0));
}

TEST_CASE("companion padding adds exact zero blocks") {
  const CompanionMatrix c = buildCompanion(VarModel::scalar({0.5, 0.3}), 4);
  CHECK(c.p == 4);
  CHECK(c.dense(0, 2) == 0.0);
  CHECK(c.dense(0, 3) == 0.0);
  CHECK(c.dense(3, 2) == 1.0);
  CHECK_THROWS_AS(buildCompanion(std::vector<Eigen::MatrixXd>{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(3, 3)}),
                  InvalidInput);
}

TEST_CASE("matrix power") {
  const CompanionMatrix c = buildCompanion(VarModel::scalar({0.5, 0.3}));
  CHECK(matrixPower(c, 0).isIdentity(0));
  const Eigen::MatrixXd c2 = matrixPower(c, 2);
  CHECK(c2(0, 0) == Approx(0.55).epsilon(1e-15));
  CHECK(c2(0, 1) == Approx(0.15).epsilon(1e-15));
  CHECK(matrixPower(buildCompanion(VarModel::scalar({0.9})), 3)(0, 0) == Approx(0.729).epsilon(1e-15));
  CHECK_THROWS_AS(matrixPower(c.dense, -1), InvalidInput);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(4);
    for (double& x : a) x = u(rng);
    const CompanionMatrix m = buildCompanion(VarModel::scalar(a));
    for (int w1 = 0; w1 < 5; ++w1)
      for (int w2 = 0; w2 < 5; ++w2)
        CHECK((matrixPower(m, w1 + w2) - matrixPower(m, w1) * matrixPower(m, w2)).cwiseAbs().maxCoeff() < 1e-10);
    const oracle::Mat ref = oracle::power(oracle::companion(a), 7);
    const Eigen::MatrixXd mine = matrixPower(m, 7);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(mine(i, j) == Approx(ref[i][j]).epsilon(1e-12));
  }
}

TEST_CASE("spectrum") {
  const Spectrum s = spectrum(buildCompanion(VarModel::scalar({0.5, 0.3})));
  const double r1 = (0.5 + std::sqrt(1.45)) / 2, r2 = (0.5 - std::sqrt(1.45)) / 2;
  CHECK(s.maxModulus == Approx(r1).epsilon(1e-12));
  std::vector<double> re{s.eigenvalues(0).real(), s.eigenvalues(1).real()};
  std::sort(re.begin(), re.end());
  CHECK(re[0] == Approx(r2).epsilon(1e-12));
  CHECK(re[1] == Approx(r1).epsilon(1e-12));
  CHECK(s.residual < 1e-12);
  CHECK(s.distinct);

  CHECK(spectrum(buildCompanion(VarModel::scalar({1.0}))).maxModulus == 1.0);

  const Spectrum h = spectrum(buildCompanion(VarModel::scalar({0.0, 0.25})));
  CHECK(h.distinct);
  CHECK(h.maxModulus == Approx(0.5));
  CHECK(h.minGap == Approx(1.0));

  const Spectrum rep = spectrum(buildCompanion(VarModel::scalar({0.5, 0.0, 0.0})));
  CHECK_FALSE(rep.distinct);

  const VarModel v({Eigen::Matrix2d{{0.5, 0.1}, {0.2, 0.3}}, Eigen::Matrix2d{{0.1, 0.0}, {0.05, -0.2}}}, 1.0);
  CHECK(spectrum(buildCompanion(v)).residual < 1e-10);
}

TEST_CASE("partition index") {
  CHECK_THROWS_AS(PartitionIndex({1, 2}), InvalidInput);
  CHECK_THROWS_AS(PartitionIndex({2, -1}), InvalidInput);
  const PartitionIndex h = PartitionIndex::hook(3, 3);
  CHECK(h.parts() == std::vector<int>{3, 1, 1});
  CHECK(h[5] == 0);
}

TEST_CASE("elementary symmetric") {
  const Eigen::VectorXcd lam = rootsOf(VarModel::scalar({0.5, 0.3}));
  CHECK(std::abs(elementarySymmetric(0, lam) - 1.0) < 1e-15);
  CHECK(std::abs(elementarySymmetric(1, lam) - 0.5) < 1e-12);
  CHECK(std::abs(elementarySymmetric(2, lam) + 0.3) < 1e-12);
  CHECK(std::abs(elementarySymmetric(3, lam)) == 0.0);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int n = 1; n <= 6; ++n) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = u(rng);
    const std::vector<double> xs(x.data(), x.data() + n);
    for (int k = 0; k <= n; ++k)
      CHECK(elementarySymmetric(k, x) == Approx(oracle::elementaryBySubsets(k, xs)).epsilon(1e-12));
  }
}

TEST_CASE("schur polynomial small shapes") {
  const Eigen::VectorXcd lam = rootsOf(VarModel::scalar({0.5, 0.3}));
  const std::complex<double> l1 = lam(0), l2 = lam(1);
  CHECK(std::abs(schurPolynomial(PartitionIndex({1, 1}), lam) - l1 * l2) < 1e-12);
  CHECK(std::abs(schurPolynomial(PartitionIndex({2}), lam) - 0.55) < 1e-12);
  CHECK(std::abs(schurPolynomial(PartitionIndex({2, 1}), lam) - l1 * l2 * (l1 + l2)) < 1e-12);
  CHECK_THROWS_AS(schurPolynomial(PartitionIndex({1}), Eigen::VectorXcd::Constant(2, 0.3)), DegenerateSpectrum);
}

TEST_CASE("schur polynomial equals tableau sum, h_omega and e_k") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  for (int trial = 0; trial < 40; ++trial) {
    const int p = 1 + trial % 4;
    std::vector<double> a(static_cast<std::size_t>(p));
    VarModel m = rejectionSampleStable(p, 1, -2, 2, 100 + trial, 1000000);
    const Eigen::VectorXcd lam = rootsOf(m);
    if (!spectrum(buildCompanion(m)).distinct) continue;
    for (int omega = 0; omega <= 6; ++omega) {
      const std::complex<double> s = schurPolynomial(PartitionIndex({omega}), lam);
      CHECK(std::abs(s - oracle::schurByTableaux({omega}, toStd(lam))) < 1e-9 * (1 + std::abs(s)));
    }
    for (int k = 1; k <= p; ++k) {
      const std::complex<double> s = schurPolynomial(PartitionIndex(std::vector<int>(static_cast<std::size_t>(k), 1)), lam);
      CHECK(std::abs(s - elementarySymmetric(k, lam)) < 1e-9);
    }
    if (p >= 2) {
      const std::complex<double> s = schurPolynomial(PartitionIndex({3, 2}), lam);
      CHECK(std::abs(s - oracle::schurByTableaux({3, 2}, toStd(lam))) < 1e-9);
    }
  }
}

TEST_CASE("vandermonde determinant is the product of root differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int n = 2; n <= 5; ++n) {
    Eigen::VectorXcd x(n);
    for (int i = 0; i < n; ++i) x(i) = {u(rng), u(rng)};
    const Eigen::MatrixXcd v = generalizedVandermonde(PartitionIndex(), x);
    std::complex<double> prod = 1.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) prod *= x(i) - x(j);
    CHECK(std::abs(v.fullPivLu().determinant() - prod) < 1e-12);

    // Explicit inverse of V^T from Lagrange basis polynomials: column j of
    // the inverse holds the coefficients of prod_{m != j}(z - x_m)/(x_j - x_m).
    Eigen::MatrixXcd vt(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) vt(i, j) = ipow(x(i), j);
    Eigen::MatrixXcd inv(n, n);
    for (int j = 0; j < n; ++j) {
      std::vector<std::complex<double>> poly{1.0};
      std::complex<double> denom = 1.0;
      for (int m = 0; m < n; ++m) {
        if (m == j) continue;
        std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
        for (std::size_t c = 0; c < poly.size(); ++c) {
          next[c + 1] += poly[c];
          next[c] -= x(m) * poly[c];
        }
        poly = next;
        denom *= x(j) - x(m);
      }
      for (int c = 0; c < n; ++c) inv(c, j) = poly[static_cast<std::size_t>(c)] / denom;
    }
    CHECK((vt * inv - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((vt.fullPivLu().inverse() - inv).cwiseAbs().maxCoeff() < 1e-8 * inv.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("power entries through the bialternant") {
  const CompanionMatrix c = buildCompanion(VarModel::scalar({0.5, 0.3}));
  CHECK(powerEntryViaSchur(c, 1, 2) == Approx(0.3).epsilon(1e-12));
  CHECK(powerEntryViaSchur(c, 2, 1) == Approx(0.55).epsilon(1e-12));
  CHECK(hookSchurValue(c, 1, 2) == Approx(-0.3).epsilon(1e-12));

  for (int trial = 0; trial < 60; ++trial) {
    const int p = 1 + trial % 6;
    const VarModel m = rejectionSampleStable(p, 1, -2, 2, 500 + trial, 1000000);
    const CompanionMatrix cm = buildCompanion(m);
    if (!spectrum(cm).distinct) continue;
    CHECK(powerEntryViaSchur(cm, 1, 1) == Approx(std::abs(m.coeff(1)(0, 0))).epsilon(1e-8));
    for (int omega = 1; omega <= 8; ++omega) {
      const Eigen::MatrixXd pw = matrixPower(cm, omega);
      for (int k = 1; k <= p; ++k) {
        const double sign = (k - 1) % 2 == 0 ? 1.0 : -1.0;
        const double expected = sign * pw(0, k - 1);
        CHECK(hookSchurValue(cm, omega, k) == Approx(expected).epsilon(1e-8).scale(1e-8));
      }
    }
  }
  CHECK_THROWS_AS(powerEntryViaSchur(buildCompanion(VarModel::scalar({0.5, 0.0, 0.0})), 2, 1), DegenerateSpectrum);
}

TEST_CASE("coefficient bound") {
  CHECK(coefficientBound(2, 1, 0.9) == Approx(1.8));
  CHECK(coefficientBound(3, 2, 0.5) == Approx(0.75));
  CHECK(coefficientBound(5, 5, 0.9) == Approx(0.59049));
  CHECK_THROWS_AS(coefficientBound(2, 3, 0.5), InvalidInput);
  CHECK_THROWS_AS(coefficientBound(2, 1, 1.0), InvalidInput);
  for (int trial = 0; trial < 300; ++trial) {
    const int p = 1 + trial % 7;
    const VarModel m = rejectionSampleStable(p, 1, -2, 2, 900 + trial, 1000000);
    const double delta = isStationary(m).spectrum.maxModulus;
    for (int k = 1; k <= p; ++k)
      CHECK(std::abs(m.coeff(k)(0, 0)) <= coefficientBound(p, k, delta) * (1 + 1e-9) + 1e-12);
  }
  CHECK(binomial(7, 3) == 35.0);
}
