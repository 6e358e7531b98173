#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "causalvar/model.hpp"
#include "causalvar/var_process.hpp"

namespace causalvar {

enum class EstimatorKind { ols, ridge, lasso, elasticNet };

std::string toString(EstimatorKind kind);
/// Accepts ols, ridge, lasso, elasticNet (case-insensitive, also elastic_net).
EstimatorKind parseEstimator(const std::string& name);

/// Row t: x = (x_{t-1}^T, ..., x_{t-p}^T), y = x_t^T, for t = p .. n-1.
struct LaggedDesign {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
  int p = 0;
  int rows() const noexcept { return static_cast<int>(x.rows()); }
  int dim() const noexcept { return static_cast<int>(y.cols()); }

  LaggedDesign subset(const std::vector<int>& rows) const;
};

LaggedDesign buildDesign(const SamplePath& path, int p);

struct FitResult {
  explicit FitResult(VarModel m) : model(std::move(m)) {}

  VarModel model;
  EstimatorKind estimator = EstimatorKind::ols;
  double lambda = 0.0;
  double muMix = 1.0;
  double cvScore = std::numeric_limits<double>::quiet_NaN();
  bool rankDeficient = false;
  bool converged = true;
  double dualityGap = 0.0;  ///< largest over target columns
  int sweeps = 0;           ///< largest over target columns
  /// Penalized objective after each coordinate-descent sweep, first column.
  std::vector<double> objectiveTrace;
};

/// Stacked p*d x d coefficient matrix to a model; noise variance is the
/// residual mean square.
VarModel modelFromCoefficients(const Eigen::MatrixXd& b, const LaggedDesign& design);

/// Minimum-norm least squares by complete orthogonal decomposition.
FitResult fitOLS(const LaggedDesign& design);

/// ridge:      ||y - X a||^2 + lambda ||a||^2 (augmented least squares)
/// lasso:      (1/2T) ||y - X a||^2 + lambda ||a||_1
/// elasticNet: (1/2T) ||y - X a||^2 + lambda mu ||a||_1 + lambda (1 - mu)/2 ||a||^2
/// Lasso and elastic net use cyclic coordinate descent; lambda = 0 is OLS.
FitResult fitRegularized(const LaggedDesign& design, EstimatorKind estimator, double lambda,
                         double muMix = 1.0);

struct CoordinateDescentResult {
  Eigen::VectorXd coef;
  double dualityGap = 0.0;
  int sweeps = 0;
  bool converged = false;
  std::vector<double> objective;
};

/// One target column of the elastic-net problem above. Stops when the largest
/// coefficient change in a sweep is below 1e-10 or the duality gap is below
/// 1e-8 (relative to ||y||^2 / 2T), else after maxSweeps.
CoordinateDescentResult coordinateDescent(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                          double l1, double l2, int maxSweeps = 100000);

/// 20 values log-spaced over [1e-4, 10].
std::vector<double> defaultLambdaGrid();
/// 0.1, 0.2, ..., 0.9.
std::vector<double> defaultMuGrid();

struct CvOptions {
  std::vector<double> lambdaGrid = defaultLambdaGrid();
  std::vector<double> muGrid = defaultMuGrid();
  int folds = 5;
  bool shuffle = false;
  std::uint64_t seed = 0;
};

/// Grid search over contiguous folds of the design rows (shuffled when asked);
/// the minimal mean validation MSE wins, ties toward larger lambda; the winner
/// is refitted on every row. OLS skips the search but still reports its CV
/// score. muGrid is used by elasticNet only.
FitResult fitCV(const SamplePath& path, int p, EstimatorKind estimator, const CvOptions& options);

}  // namespace causalvar
