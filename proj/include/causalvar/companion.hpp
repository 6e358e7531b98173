#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "causalvar/error.hpp"
#include "causalvar/model.hpp"

namespace causalvar {

inline constexpr double kDefaultDistinctTol = 1e-7;
/// Schur values with |imag| above this (relative to 1 + |real|) are rejected.
inline constexpr double kSchurImagTol = 1e-8;

/// Multi-companion lift of a VAR(p): first block row [A_1 ... A_p], shifted
/// identity below.
struct CompanionMatrix {
  int d = 0;
  int p = 0;
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::MatrixXd dense;

  int size() const noexcept { return d * p; }
};

/// `order` (0 = model order) pads with zero blocks when larger than p.
CompanionMatrix buildCompanion(const VarModel& model, int order = 0);
CompanionMatrix buildCompanion(const std::vector<Eigen::MatrixXd>& blocks, int order = 0);

/// Exact repeated-squaring power; exponent 0 gives the identity.
template <typename Derived>
typename Derived::PlainObject matrixPower(const Eigen::MatrixBase<Derived>& m, int exponent) {
  using Plain = typename Derived::PlainObject;
  if (m.rows() != m.cols()) throw InvalidInput("matrixPower: matrix is not square");
  if (exponent < 0) throw InvalidInput("matrixPower: negative exponent");
  Plain result = Plain::Identity(m.rows(), m.cols());
  Plain base = m;
  while (exponent > 0) {
    if (exponent & 1) result = (result * base).eval();
    exponent >>= 1;
    if (exponent > 0) base = (base * base).eval();
  }
  return result;
}

Eigen::MatrixXd matrixPower(const CompanionMatrix& c, int omega);

struct Spectrum {
  Eigen::VectorXcd eigenvalues;
  double maxModulus = 0.0;
  bool distinct = false;
  double minGap = 0.0;
  /// Largest normalized residual of det(I lambda^p - sum A_k lambda^{p-k}).
  double residual = 0.0;
};

Spectrum spectrum(const CompanionMatrix& c, double distinctTol = kDefaultDistinctTol);

/// Weakly decreasing list of non-negative parts.
class PartitionIndex {
 public:
  PartitionIndex() = default;
  explicit PartitionIndex(std::vector<int> parts);

  /// {omega, 1 (k-1 times)}: indexes the (1,k) entry of a companion power.
  static PartitionIndex hook(int omega, int k);

  const std::vector<int>& parts() const noexcept { return parts_; }
  int length() const noexcept { return static_cast<int>(parts_.size()); }
  /// i-th part, zero beyond the stored length.
  int operator[](int i) const noexcept {
    return i < length() ? parts_[static_cast<std::size_t>(i)] : 0;
  }

 private:
  std::vector<int> parts_;
};

/// x^n by repeated squaring; exact at x = 0 for complex scalars too.
template <typename Scalar>
Scalar ipow(Scalar x, int n) {
  Scalar r(1);
  while (n > 0) {
    if (n & 1) r *= x;
    n >>= 1;
    if (n > 0) x *= x;
  }
  return r;
}

/// e_k(x): sum over all k-subsets of products. e_0 = 1, e_k = 0 for k > n.
template <typename Derived>
typename Derived::Scalar elementarySymmetric(int k, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (k < 0) throw InvalidInput("elementarySymmetric: negative order");
  const Eigen::Index n = x.size();
  if (k > n) return Scalar(0);
  // e[j] after processing i variables holds e_j(x_1..x_i).
  std::vector<Scalar> e(static_cast<std::size_t>(k) + 1, Scalar(0));
  e[0] = Scalar(1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = std::min<int>(k, static_cast<int>(i) + 1); j >= 1; --j)
      e[static_cast<std::size_t>(j)] += x(i) * e[static_cast<std::size_t>(j - 1)];
  return e[static_cast<std::size_t>(k)];
}

/// Rows x_j^{n-1-i+mu_i}, i = 0..n-1. With the empty partition this is the
/// ordinary Vandermonde matrix (highest power in the first row).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> generalizedVandermonde(
    const PartitionIndex& mu, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const int n = static_cast<int>(x.size());
  if (mu.length() > n) throw InvalidInput("generalizedVandermonde: partition longer than variable set");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> v(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v(i, j) = ipow<Scalar>(x(j), n - 1 - i + mu[i]);
  return v;
}

/// Schur polynomial s_mu(lambda) = det V_{mu,lambda} / det V_lambda, both
/// determinants by pivoted LU in complex arithmetic. Throws
/// DegenerateSpectrum when two entries of lambda are closer than distinctTol.
std::complex<double> schurPolynomial(const PartitionIndex& mu, const Eigen::VectorXcd& lambda,
                                     double distinctTol = kDefaultDistinctTol);

/// Real value of s_{(omega,1^{k-1})} over the companion spectrum (d == 1,
/// k is 1-based). Equals (-1)^{k-1} (C^omega)_{1k}.
double hookSchurValue(const CompanionMatrix& c, int omega, int k,
                      double distinctTol = kDefaultDistinctTol);
double hookSchurValue(const Eigen::VectorXcd& lambda, int omega, int k,
                      double distinctTol = kDefaultDistinctTol);

/// |(C^omega)_{1k}| through the bialternant. The sign is not recoverable from
/// the Schur path; take it from matrixPower when needed.
double powerEntryViaSchur(const CompanionMatrix& c, int omega, int k,
                          double distinctTol = kDefaultDistinctTol);

/// C(p,k) delta^k, the bound on |a_k| for an AR(p) with spectral radius <= delta.
double coefficientBound(int p, int k, double delta);

double binomial(int n, int k);

}  // namespace causalvar
