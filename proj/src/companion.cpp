#include "causalvar/companion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace causalvar {

CompanionMatrix buildCompanion(const std::vector<Eigen::MatrixXd>& blocks, int order) {
  if (blocks.empty()) throw InvalidInput("buildCompanion: no coefficient blocks");
  const Eigen::Index d = blocks.front().rows();
  for (const auto& b : blocks) {
    if (b.rows() != d || b.cols() != d)
      throw InvalidInput("buildCompanion: coefficient blocks must all be " + std::to_string(d) +
                         "x" + std::to_string(d));
  }
  const int p = static_cast<int>(blocks.size());
  const int nu = order == 0 ? p : order;
  if (nu < p) throw InvalidInput("buildCompanion: target order below model order");

  CompanionMatrix c;
  c.d = static_cast<int>(d);
  c.p = nu;
  c.blocks = blocks;
  c.blocks.resize(static_cast<std::size_t>(nu), Eigen::MatrixXd::Zero(d, d));
  const Eigen::Index n = d * nu;
  c.dense = Eigen::MatrixXd::Zero(n, n);
  for (int l = 0; l < nu; ++l) c.dense.block(0, l * d, d, d) = c.blocks[static_cast<std::size_t>(l)];
  if (nu > 1) c.dense.bottomLeftCorner(n - d, n - d).setIdentity();
  return c;
}

CompanionMatrix buildCompanion(const VarModel& model, int order) {
  return buildCompanion(model.coeffs(), order);
}

Eigen::MatrixXd matrixPower(const CompanionMatrix& c, int omega) {
  return matrixPower(c.dense, omega);
}

namespace {

// sigma_min(I lambda^p - sum_k A_k lambda^{p-k}), normalized by the size of
// the terms entering the sum.
double characteristicResidual(const CompanionMatrix& c, std::complex<double> lambda) {
  const int d = c.d;
  Eigen::MatrixXcd poly = Eigen::MatrixXcd::Identity(d, d) * ipow(lambda, c.p);
  double scale = std::pow(std::abs(lambda), c.p);
  for (int k = 1; k <= c.p; ++k) {
    const auto& a = c.blocks[static_cast<std::size_t>(k - 1)];
    const std::complex<double> w = ipow(lambda, c.p - k);
    poly -= a.cast<std::complex<double>>() * w;
    scale += a.norm() * std::abs(w);
  }
  double smin;
  if (d == 1) {
    smin = std::abs(poly(0, 0));
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(poly);
    smin = svd.singularValues()(d - 1);
  }
  return smin / std::max(scale, std::numeric_limits<double>::min());
}

double minPairwiseGap(const Eigen::VectorXcd& v) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    for (Eigen::Index j = i + 1; j < v.size(); ++j) gap = std::min(gap, std::abs(v(i) - v(j)));
  return gap;
}

}  // namespace

Spectrum spectrum(const CompanionMatrix& c, double distinctTol) {
  Spectrum s;
  if (c.size() == 1) {
    s.eigenvalues = Eigen::VectorXcd::Constant(1, c.dense(0, 0));
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(c.dense, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
      throw NumericalError("spectrum: eigenvalue iteration did not converge");
    s.eigenvalues = solver.eigenvalues();
  }
  s.maxModulus = s.eigenvalues.cwiseAbs().maxCoeff();
  s.minGap = minPairwiseGap(s.eigenvalues);
  s.distinct = s.minGap > distinctTol;
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i)
    s.residual = std::max(s.residual, characteristicResidual(c, s.eigenvalues(i)));
  return s;
}

PartitionIndex::PartitionIndex(std::vector<int> parts) : parts_(std::move(parts)) {
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (parts_[i] < 0) throw InvalidInput("PartitionIndex: negative part");
    if (i > 0 && parts_[i] > parts_[i - 1])
      throw InvalidInput("PartitionIndex: parts must be weakly decreasing");
  }
}

PartitionIndex PartitionIndex::hook(int omega, int k) {
  if (omega < 1 || k < 1) throw InvalidInput("PartitionIndex::hook: need omega >= 1 and k >= 1");
  std::vector<int> parts(static_cast<std::size_t>(k), 1);
  parts[0] = omega;
  return PartitionIndex(std::move(parts));
}

std::complex<double> schurPolynomial(const PartitionIndex& mu, const Eigen::VectorXcd& lambda,
                                     double distinctTol) {
  if (lambda.size() == 0) throw InvalidInput("schurPolynomial: empty variable set");
  if (mu.length() > lambda.size())
    throw InvalidInput("schurPolynomial: partition has more parts than variables");
  if (minPairwiseGap(lambda) <= distinctTol)
    throw DegenerateSpectrum("schurPolynomial: variables not pairwise distinct");

  const Eigen::MatrixXcd numerator = generalizedVandermonde(mu, lambda);
  const Eigen::MatrixXcd denominator = generalizedVandermonde(PartitionIndex{}, lambda);
  const std::complex<double> detDen = Eigen::FullPivLU<Eigen::MatrixXcd>(denominator).determinant();
  if (std::abs(detDen) == 0.0) throw DegenerateSpectrum("schurPolynomial: singular Vandermonde");
  return Eigen::FullPivLU<Eigen::MatrixXcd>(numerator).determinant() / detDen;
}

double hookSchurValue(const Eigen::VectorXcd& lambda, int omega, int k, double distinctTol) {
  if (k > lambda.size()) throw InvalidInput("hookSchurValue: k exceeds the number of eigenvalues");
  const std::complex<double> s = schurPolynomial(PartitionIndex::hook(omega, k), lambda, distinctTol);
  if (std::abs(s.imag()) >= kSchurImagTol * (1.0 + std::abs(s.real())))
    throw DegenerateSpectrum("hookSchurValue: bialternant quotient is not real to tolerance");
  return s.real();
}

double hookSchurValue(const CompanionMatrix& c, int omega, int k, double distinctTol) {
  if (c.d != 1) throw InvalidInput("hookSchurValue: scalar (d = 1) companion required");
  const Spectrum s = spectrum(c, distinctTol);
  if (!s.distinct) throw DegenerateSpectrum("hookSchurValue: repeated eigenvalues");
  return hookSchurValue(s.eigenvalues, omega, k, distinctTol);
}

double powerEntryViaSchur(const CompanionMatrix& c, int omega, int k, double distinctTol) {
  return std::abs(hookSchurValue(c, omega, k, distinctTol));
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

double coefficientBound(int p, int k, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("coefficientBound: delta must lie in (0,1)");
  if (k < 1 || k > p) throw InvalidInput("coefficientBound: k must lie in [1,p]");
  return binomial(p, k) * std::pow(delta, k);
}

}  // namespace causalvar
