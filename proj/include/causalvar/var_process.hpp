#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "causalvar/companion.hpp"
#include "causalvar/model.hpp"

namespace causalvar {

struct StationarityCheck {
  bool stationary = false;
  Spectrum spectrum;
};

/// Stable iff the companion spectral radius is <= 1 - margin (margin 0 means
/// strict |lambda| < 1).
StationarityCheck isStationary(const VarModel& model, double margin = 0.0);

enum class NoiseKind { gaussian, uniform };

/// Observed path; row t of `values` is x_t.
struct SamplePath {
  Eigen::MatrixXd values;
  std::uint64_t seed = 0;
  int burnIn = 0;

  int length() const noexcept { return static_cast<int>(values.rows()); }
  int dim() const noexcept { return static_cast<int>(values.cols()); }
};

/// max(1000, ceil(log 1e-9 / log delta)), capped at 1e6; 0 when delta >= 1.
int defaultBurnIn(double maxModulus);

/// Simulates from the zero state, discards burnIn steps, keeps n. Pure in
/// (model, n, seed, burnIn, noise). Throws NonStationaryError for unstable
/// models unless allowUnstable is set.
SamplePath simulate(const VarModel& model, int n, std::uint64_t seed,
                    std::optional<int> burnIn = std::nullopt, NoiseKind noise = NoiseKind::gaussian,
                    bool allowUnstable = false);

/// Block-Toeplitz autocovariance of y_t = (x_t, x_{t-1}, ..., x_{t-n+1}).
/// Block (i,j) is E[x_{t-i} x_{t-j}^T] = Gamma(j - i), Gamma(h) = E[x_t x_{t-h}^T],
/// Gamma(-h) = Gamma(h)^T.
class AutocovMatrix {
 public:
  AutocovMatrix() = default;
  /// lags[h] = Gamma(h) for h = 0..n-1.
  explicit AutocovMatrix(std::vector<Eigen::MatrixXd> lags);

  int blocks() const noexcept { return static_cast<int>(lags_.size()); }
  int dim() const noexcept { return lags_.empty() ? 0 : static_cast<int>(lags_.front().rows()); }
  const Eigen::MatrixXd& dense() const noexcept { return dense_; }
  const Eigen::MatrixXd& lag(int h) const { return lags_.at(static_cast<std::size_t>(h)); }
  const std::vector<Eigen::MatrixXd>& lags() const noexcept { return lags_; }
  /// Leading principal submatrix of n blocks.
  AutocovMatrix leading(int n) const;

 private:
  std::vector<Eigen::MatrixXd> lags_;
  Eigen::MatrixXd dense_;
};

/// Solution of X = A X A^T + Q. Kronecker solve up to 40x40, squared Smith
/// iteration above that.
Eigen::MatrixXd solveDiscreteLyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);

/// Stationary covariance of the companion state (x_t, ..., x_{t-p+1}).
Eigen::MatrixXd stationaryStateCovariance(const VarModel& model);

/// Exact lags Gamma(0..count-1) via the Lyapunov equation and the Yule-Walker
/// recursion.
std::vector<Eigen::MatrixXd> exactAutocovLags(const VarModel& model, int count);

AutocovMatrix exactAutocov(const VarModel& model, int n);

inline constexpr int kDefaultMinWindows = 10;

/// Uncentered 1/T sample autocovariances assembled block-Toeplitz.
AutocovMatrix empiricalAutocov(const SamplePath& path, int n, int minWindows = kDefaultMinWindows);

/// Draws coefficients i.i.d. uniform on [lo, hi] until the model is strictly
/// stable (spectral radius < 1 - margin). Throws NumericalError after
/// maxTries rejections.
VarModel rejectionSampleStable(int p, int d, double lo, double hi, std::uint64_t seed,
                               int maxTries, double noiseVariance = 1.0, double margin = 0.0,
                               int* triesUsed = nullptr);

/// Step-down (Schur-Cohn) test for a scalar AR polynomial: true iff every
/// root of z^p - a_1 z^{p-1} - ... - a_p lies strictly inside the circle of
/// radius `radius`.
bool scalarRootsInside(const Eigen::VectorXd& a, double radius = 1.0);

}  // namespace causalvar
