#include "causalvar/var_process.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "causalvar/error.hpp"
#include "causalvar/seeding.hpp"

namespace causalvar {

// ---------------------------------------------------------------- VarModel

VarModel::VarModel(std::vector<Eigen::MatrixXd> coeffs, double noiseVariance)
    : coeffs_(std::move(coeffs)), noiseVariance_(noiseVariance), dim_(0) {
  if (coeffs_.empty()) throw InvalidInput("VarModel: order must be at least 1");
  dim_ = static_cast<int>(coeffs_.front().rows());
  if (dim_ < 1) throw InvalidInput("VarModel: dimension must be at least 1");
  for (std::size_t l = 0; l < coeffs_.size(); ++l) {
    const auto& a = coeffs_[l];
    if (a.rows() != dim_ || a.cols() != dim_)
      throw InvalidInput("VarModel: coefficient block " + std::to_string(l + 1) + " is " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ", expected " +
                         std::to_string(dim_) + "x" + std::to_string(dim_));
    if (!a.allFinite()) throw InvalidInput("VarModel: non-finite coefficient");
  }
  if (!(noiseVariance_ > 0.0) || !std::isfinite(noiseVariance_))
    throw InvalidInput("VarModel: noise variance must be positive and finite");
}

VarModel VarModel::scalar(const std::vector<double>& a, double noiseVariance) {
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(a.size());
  for (double v : a) blocks.push_back(Eigen::MatrixXd::Constant(1, 1, v));
  return VarModel(std::move(blocks), noiseVariance);
}

Eigen::MatrixXd VarModel::coeff(int lag) const {
  if (lag < 1) throw InvalidInput("VarModel::coeff: lag must be >= 1");
  if (lag > order()) return Eigen::MatrixXd::Zero(dim_, dim_);
  return coeffs_[static_cast<std::size_t>(lag - 1)];
}

Eigen::MatrixXd VarModel::stackedCoeffs(int order) const {
  const int nu = order == 0 ? this->order() : order;
  if (nu < this->order()) throw InvalidInput("VarModel::stackedCoeffs: order below model order");
  Eigen::MatrixXd top = Eigen::MatrixXd::Zero(dim_, static_cast<Eigen::Index>(dim_) * nu);
  for (int l = 0; l < this->order(); ++l)
    top.block(0, static_cast<Eigen::Index>(l) * dim_, dim_, dim_) = coeffs_[static_cast<std::size_t>(l)];
  return top;
}

VarModel VarModel::padded(int order) const {
  if (order < this->order()) throw InvalidInput("VarModel::padded: order below model order");
  auto blocks = coeffs_;
  blocks.resize(static_cast<std::size_t>(order), Eigen::MatrixXd::Zero(dim_, dim_));
  return VarModel(std::move(blocks), noiseVariance_);
}

Eigen::VectorXd VarModel::scalarCoeffs() const {
  if (dim_ != 1) throw InvalidInput("VarModel::scalarCoeffs: model is not scalar");
  Eigen::VectorXd a(order());
  for (int l = 0; l < order(); ++l) a(l) = coeffs_[static_cast<std::size_t>(l)](0, 0);
  return a;
}

// ------------------------------------------------------------- stationarity

StationarityCheck isStationary(const VarModel& model, double margin) {
  StationarityCheck out;
  out.spectrum = spectrum(buildCompanion(model));
  out.stationary = out.spectrum.maxModulus < 1.0 - margin;
  return out;
}

bool scalarRootsInside(const Eigen::VectorXd& a, double radius) {
  const Eigen::Index p = a.size();
  Eigen::VectorXd phi(p);
  double scale = 1.0;
  for (Eigen::Index k = 0; k < p; ++k) {
    scale *= radius;
    phi(k) = a(k) / scale;
  }
  // Durbin-Levinson step-down: all partial autocorrelations inside (-1, 1).
  for (Eigen::Index k = p; k >= 1; --k) {
    const double r = phi(k - 1);
    if (!(std::abs(r) < 1.0)) return false;
    if (k == 1) break;
    const double denom = 1.0 - r * r;
    Eigen::VectorXd next(k - 1);
    for (Eigen::Index j = 1; j < k; ++j) next(j - 1) = (phi(j - 1) + r * phi(k - j - 1)) / denom;
    phi.head(k - 1) = next;
  }
  return true;
}

// --------------------------------------------------------------- simulation

int defaultBurnIn(double maxModulus) {
  constexpr int kFloor = 1000;
  constexpr int kCap = 1'000'000;
  if (!(maxModulus > 0.0)) return kFloor;
  if (maxModulus >= 1.0) return 0;
  const double steps = std::ceil(std::log(1e-9) / std::log(maxModulus));
  return static_cast<int>(std::clamp(steps, static_cast<double>(kFloor), static_cast<double>(kCap)));
}

SamplePath simulate(const VarModel& model, int n, std::uint64_t seed, std::optional<int> burnIn,
                    NoiseKind noise, bool allowUnstable) {
  if (n < 1) throw InvalidInput("simulate: path length must be positive");
  const StationarityCheck check = isStationary(model);
  if (!check.stationary && !allowUnstable)
    throw NonStationaryError("simulate: model is not stationary (max |lambda| = " +
                                 std::to_string(check.spectrum.maxModulus) + ")",
                             check.spectrum.maxModulus);
  const int burn = burnIn.value_or(defaultBurnIn(check.spectrum.maxModulus));
  if (burn < 0) throw InvalidInput("simulate: negative burn-in");

  const int d = model.dim();
  const int p = model.order();
  const double sd = std::sqrt(model.noiseVariance());
  Rng rng = makeRng(seed);
  std::normal_distribution<double> gauss(0.0, sd);
  const double halfWidth = std::sqrt(3.0) * sd;
  std::uniform_real_distribution<double> unif(-halfWidth, halfWidth);

  // Coefficients as a flat array: coef[(l * d + i) * d + j] = (A_{l+1})_{ij}.
  std::vector<double> coef(static_cast<std::size_t>(p * d * d));
  for (int l = 0; l < p; ++l)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        coef[static_cast<std::size_t>((l * d + i) * d + j)] = model.coeffs()[static_cast<std::size_t>(l)](i, j);

  // Ring of the last p states; ring[slot * d + i].
  std::vector<double> ring(static_cast<std::size_t>(p * d), 0.0);
  std::vector<double> x(static_cast<std::size_t>(d));
  int head = 0;  // slot holding x_{t-1}

  SamplePath path;
  path.seed = seed;
  path.burnIn = burn;
  path.values.resize(n, d);
  const long total = static_cast<long>(burn) + n;
  for (long t = 0; t < total; ++t) {
    for (int i = 0; i < d; ++i) {
      double v = noise == NoiseKind::gaussian ? gauss(rng) : unif(rng);
      for (int l = 0; l < p; ++l) {
        const int slot = (head - l + p) % p;
        const double* a = &coef[static_cast<std::size_t>((l * d + i) * d)];
        const double* past = &ring[static_cast<std::size_t>(slot * d)];
        for (int j = 0; j < d; ++j) v += a[j] * past[j];
      }
      x[static_cast<std::size_t>(i)] = v;
    }
    head = (head + 1) % p;
    std::copy(x.begin(), x.end(), ring.begin() + head * d);
    if (t >= burn)
      for (int i = 0; i < d; ++i) path.values(t - burn, i) = x[static_cast<std::size_t>(i)];
  }
  if (!path.values.allFinite()) throw NumericalError("simulate: path diverged to non-finite values");
  return path;
}

// ------------------------------------------------------------ autocovariance

AutocovMatrix::AutocovMatrix(std::vector<Eigen::MatrixXd> lags) : lags_(std::move(lags)) {
  if (lags_.empty()) throw InvalidInput("AutocovMatrix: at least one lag required");
  const Eigen::Index d = lags_.front().rows();
  const Eigen::Index n = static_cast<Eigen::Index>(lags_.size());
  dense_.resize(n * d, n * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j >= i)
        dense_.block(i * d, j * d, d, d) = lags_[static_cast<std::size_t>(j - i)];
      else
        dense_.block(i * d, j * d, d, d) = lags_[static_cast<std::size_t>(i - j)].transpose();
    }
  }
}

AutocovMatrix AutocovMatrix::leading(int n) const {
  if (n < 1 || n > blocks()) throw InvalidInput("AutocovMatrix::leading: block count out of range");
  return AutocovMatrix(std::vector<Eigen::MatrixXd>(lags_.begin(), lags_.begin() + n));
}

Eigen::MatrixXd solveDiscreteLyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || q.rows() != n || q.cols() != n)
    throw InvalidInput("solveDiscreteLyapunov: A and Q must be square and of equal size");
  Eigen::MatrixXd x;
  if (n <= 40) {
    // (I - A (x) A) vec(X) = vec(Q), column-major vec.
    const Eigen::Index m = n * n;
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) lhs.block(i * n, j * n, n, n) -= a(i, j) * a;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);
    const Eigen::VectorXd sol = lu.solve(Eigen::Map<const Eigen::VectorXd>(q.data(), m));
    if (!sol.allFinite()) throw NumericalError("solveDiscreteLyapunov: singular Kronecker system");
    x = Eigen::Map<const Eigen::MatrixXd>(sol.data(), n, n);
  } else {
    // Squared Smith iteration: X_{k+1} = X_k + A_k X_k A_k^T, A_{k+1} = A_k^2.
    x = q;
    Eigen::MatrixXd ak = a;
    for (int it = 0;; ++it) {
      const Eigen::MatrixXd inc = ak * x * ak.transpose();
      x += inc;
      if (inc.cwiseAbs().maxCoeff() <= 1e-12 * x.cwiseAbs().maxCoeff()) break;
      if (it > 64 || !x.allFinite())
        throw NumericalError("solveDiscreteLyapunov: Smith iteration did not converge");
      ak = (ak * ak).eval();
    }
  }
  return 0.5 * (x + x.transpose());
}

Eigen::MatrixXd stationaryStateCovariance(const VarModel& model) {
  const StationarityCheck check = isStationary(model);
  if (!check.stationary)
    throw NonStationaryError("stationary covariance undefined: max |lambda| = " +
                                 std::to_string(check.spectrum.maxModulus),
                             check.spectrum.maxModulus);
  const CompanionMatrix c = buildCompanion(model);
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(c.size(), c.size());
  q.topLeftCorner(c.d, c.d).diagonal().setConstant(model.noiseVariance());
  return solveDiscreteLyapunov(c.dense, q);
}

std::vector<Eigen::MatrixXd> exactAutocovLags(const VarModel& model, int count) {
  if (count < 1) throw InvalidInput("exactAutocovLags: count must be positive");
  const int d = model.dim();
  const int p = model.order();
  const Eigen::MatrixXd state = stationaryStateCovariance(model);
  std::vector<Eigen::MatrixXd> lags;
  lags.reserve(static_cast<std::size_t>(std::max(count, p)));
  for (int h = 0; h < p; ++h) lags.push_back(state.block(0, static_cast<Eigen::Index>(h) * d, d, d));
  for (int h = p; h < count; ++h) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
    for (int k = 1; k <= p; ++k) g += model.coeffs()[static_cast<std::size_t>(k - 1)] * lags[static_cast<std::size_t>(h - k)];
    lags.push_back(std::move(g));
  }
  lags.resize(static_cast<std::size_t>(count));
  return lags;
}

AutocovMatrix exactAutocov(const VarModel& model, int n) {
  if (n < 1) throw InvalidInput("exactAutocov: block count must be positive");
  return AutocovMatrix(exactAutocovLags(model, n));
}

AutocovMatrix empiricalAutocov(const SamplePath& path, int n, int minWindows) {
  if (n < 1) throw InvalidInput("empiricalAutocov: block count must be positive");
  const Eigen::Index len = path.values.rows();
  if (len < n + minWindows)
    throw InvalidInput("empiricalAutocov: path of length " + std::to_string(len) +
                       " too short for " + std::to_string(n) + " blocks");
  std::vector<Eigen::MatrixXd> lags;
  lags.reserve(static_cast<std::size_t>(n));
  const auto& x = path.values;
  for (int h = 0; h < n; ++h) {
    // sum_t x_t x_{t-h}^T over t = h..len-1
    lags.push_back(x.bottomRows(len - h).transpose() * x.topRows(len - h) / static_cast<double>(len));
  }
  return AutocovMatrix(std::move(lags));
}

VarModel rejectionSampleStable(int p, int d, double lo, double hi, std::uint64_t seed, int maxTries,
                               double noiseVariance, double margin, int* triesUsed) {
  if (p < 1 || d < 1) throw InvalidInput("rejectionSampleStable: p and d must be positive");
  if (!(lo < hi)) throw InvalidInput("rejectionSampleStable: need lo < hi");
  if (maxTries < 1) throw InvalidInput("rejectionSampleStable: maxTries must be positive");
  Rng rng = makeRng(seed);
  std::uniform_real_distribution<double> unif(lo, hi);
  for (int tries = 1; tries <= maxTries; ++tries) {
    std::vector<Eigen::MatrixXd> blocks(static_cast<std::size_t>(p), Eigen::MatrixXd(d, d));
    for (auto& b : blocks)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) b(i, j) = unif(rng);
    if (d == 1) {
      Eigen::VectorXd a(p);
      for (int l = 0; l < p; ++l) a(l) = blocks[static_cast<std::size_t>(l)](0, 0);
      if (!scalarRootsInside(a, 1.0 - margin)) continue;
    }
    VarModel model(std::move(blocks), noiseVariance);
    if (isStationary(model, margin).stationary) {
      if (triesUsed) *triesUsed = tries;
      return model;
    }
  }
  if (triesUsed) *triesUsed = maxTries;
  throw NumericalError("rejectionSampleStable: no stable draw within " + std::to_string(maxTries) +
                       " tries");
}

}  // namespace causalvar
