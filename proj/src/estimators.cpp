#include "causalvar/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

#include "causalvar/error.hpp"
#include "causalvar/seeding.hpp"

namespace causalvar {

namespace {

double softThreshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double validationMse(const Eigen::MatrixXd& b, const LaggedDesign& d) {
  return (d.y - d.x * b).squaredNorm() / static_cast<double>(d.y.size());
}

Eigen::MatrixXd olsCoefficients(const LaggedDesign& d, bool* rankDeficient) {
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(d.x);
  if (rankDeficient) *rankDeficient = cod.rank() < d.x.cols();
  return cod.solve(d.y);
}

Eigen::MatrixXd ridgeCoefficients(const LaggedDesign& d, double lambda) {
  const Eigen::Index t = d.x.rows();
  const Eigen::Index k = d.x.cols();
  Eigen::MatrixXd xa(t + k, k);
  xa << d.x, std::sqrt(lambda) * Eigen::MatrixXd::Identity(k, k);
  Eigen::MatrixXd ya = Eigen::MatrixXd::Zero(t + k, d.y.cols());
  ya.topRows(t) = d.y;
  return xa.colPivHouseholderQr().solve(ya);
}

struct Penalty {
  double l1 = 0.0;
  double l2 = 0.0;
};

Penalty penaltyFor(EstimatorKind e, double lambda, double mu) {
  switch (e) {
    case EstimatorKind::lasso: return {lambda, 0.0};
    case EstimatorKind::elasticNet: return {lambda * mu, lambda * (1.0 - mu)};
    default: return {};
  }
}

// Coefficients of one fit; fills the convergence fields of `out`.
Eigen::MatrixXd solve(const LaggedDesign& d, EstimatorKind e, double lambda, double mu,
                      FitResult* out) {
  if (lambda == 0.0 || e == EstimatorKind::ols) {
    bool rank = false;
    Eigen::MatrixXd b = olsCoefficients(d, &rank);
    if (out) out->rankDeficient = rank;
    return b;
  }
  if (e == EstimatorKind::ridge) return ridgeCoefficients(d, lambda);
  const Penalty pen = penaltyFor(e, lambda, mu);
  Eigen::MatrixXd b(d.x.cols(), d.y.cols());
  for (Eigen::Index c = 0; c < d.y.cols(); ++c) {
    CoordinateDescentResult cd = coordinateDescent(d.x, d.y.col(c), pen.l1, pen.l2);
    b.col(c) = cd.coef;
    if (out) {
      out->converged = out->converged && cd.converged;
      out->dualityGap = std::max(out->dualityGap, cd.dualityGap);
      out->sweeps = std::max(out->sweeps, cd.sweeps);
      if (c == 0) out->objectiveTrace = std::move(cd.objective);
    }
  }
  return b;
}

void checkPenalty(double lambda, double mu) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be finite and >= 0");
  if (!(mu >= 0.0 && mu <= 1.0)) throw InvalidInput("mixing weight must lie in [0, 1]");
}

}  // namespace

std::string toString(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::ols: return "ols";
    case EstimatorKind::ridge: return "ridge";
    case EstimatorKind::lasso: return "lasso";
    case EstimatorKind::elasticNet: return "elasticNet";
  }
  return "?";
}

EstimatorKind parseEstimator(const std::string& name) {
  std::string s;
  for (char ch : name)
    if (ch != '_' && ch != '-') s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (s == "ols") return EstimatorKind::ols;
  if (s == "ridge") return EstimatorKind::ridge;
  if (s == "lasso") return EstimatorKind::lasso;
  if (s == "elasticnet" || s == "enet") return EstimatorKind::elasticNet;
  throw ConfigError("unknown estimator '" + name + "'");
}

LaggedDesign LaggedDesign::subset(const std::vector<int>& rows) const {
  LaggedDesign out;
  out.p = p;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()), y.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    out.y.row(static_cast<Eigen::Index>(i)) = y.row(rows[i]);
  }
  return out;
}

LaggedDesign buildDesign(const SamplePath& path, int p) {
  if (p < 1) throw InvalidInput("buildDesign: p must be >= 1");
  const int n = path.length();
  const int d = path.dim();
  if (n <= p)
    throw InvalidInput("buildDesign: path of length " + std::to_string(n) + " too short for p = " +
                       std::to_string(p));
  LaggedDesign out;
  out.p = p;
  out.x.resize(n - p, static_cast<Eigen::Index>(p) * d);
  out.y = path.values.bottomRows(n - p);
  for (int t = p; t < n; ++t)
    for (int l = 1; l <= p; ++l) out.x.block(t - p, (l - 1) * d, 1, d) = path.values.row(t - l);
  return out;
}

VarModel modelFromCoefficients(const Eigen::MatrixXd& b, const LaggedDesign& design) {
  const int d = design.dim();
  std::vector<Eigen::MatrixXd> blocks;
  for (int l = 0; l < design.p; ++l) blocks.push_back(b.middleRows(l * d, d).transpose());
  double rms = design.rows() > 0 ? validationMse(b, design) : 0.0;
  if (!(rms > 0.0) || !std::isfinite(rms)) rms = std::numeric_limits<double>::min();
  return VarModel(std::move(blocks), rms);
}

FitResult fitOLS(const LaggedDesign& design) {
  bool rank = false;
  const Eigen::MatrixXd b = olsCoefficients(design, &rank);
  FitResult r(modelFromCoefficients(b, design));
  r.estimator = EstimatorKind::ols;
  r.rankDeficient = rank;
  return r;
}

CoordinateDescentResult coordinateDescent(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                          double l1, double l2, int maxSweeps) {
  const Eigen::Index t = x.rows();
  const Eigen::Index k = x.cols();
  const double invT = 1.0 / static_cast<double>(t);
  const Eigen::VectorXd colSq = x.colwise().squaredNorm().transpose() * invT;
  const double yScale = 0.5 * y.squaredNorm() * invT;

  CoordinateDescentResult out;
  out.coef = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd r = y;
  const auto objective = [&] {
    return 0.5 * r.squaredNorm() * invT + l1 * out.coef.lpNorm<1>() + 0.5 * l2 * out.coef.squaredNorm();
  };
  // Elastic-net duality gap in the (1/2T) scaling.
  const auto gap = [&] {
    const double alpha = l1 * t;
    const double beta = l2 * t;
    const Eigen::VectorXd xta = x.transpose() * r - beta * out.coef;
    const double dualNorm = xta.cwiseAbs().maxCoeff();
    const double rNorm2 = r.squaredNorm();
    double scale = 1.0;
    double aNorm2 = rNorm2;
    if (dualNorm > alpha) {
      scale = alpha / dualNorm;
      aNorm2 = rNorm2 * scale * scale;
    }
    const double g = 0.5 * (rNorm2 + aNorm2) + alpha * out.coef.lpNorm<1>() - scale * r.dot(y) +
                     0.5 * beta * (1.0 + scale * scale) * out.coef.squaredNorm();
    return g * invT;
  };

  for (int sweep = 1; sweep <= maxSweeps; ++sweep) {
    double maxChange = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (colSq(j) == 0.0) continue;
      const double old = out.coef(j);
      const double rho = x.col(j).dot(r) * invT + colSq(j) * old;
      const double fresh = softThreshold(rho, l1) / (colSq(j) + l2);
      if (fresh != old) {
        r.noalias() -= (fresh - old) * x.col(j);
        out.coef(j) = fresh;
        maxChange = std::max(maxChange, std::abs(fresh - old));
      }
    }
    out.objective.push_back(objective());
    out.sweeps = sweep;
    if (maxChange < 1e-10 || (sweep % 10 == 0 && gap() <= 1e-8 * std::max(yScale, 1e-300))) {
      out.converged = true;
      break;
    }
  }
  out.dualityGap = std::max(0.0, gap());
  return out;
}

FitResult fitRegularized(const LaggedDesign& design, EstimatorKind estimator, double lambda,
                         double muMix) {
  checkPenalty(lambda, muMix);
  FitResult r(VarModel::scalar({0.0}));
  r.estimator = estimator;
  r.lambda = lambda;
  r.muMix = estimator == EstimatorKind::elasticNet ? muMix
            : estimator == EstimatorKind::ridge    ? 0.0
                                                   : 1.0;
  const Eigen::MatrixXd b = solve(design, estimator, lambda, muMix, &r);
  r.model = modelFromCoefficients(b, design);
  return r;
}

std::vector<double> defaultLambdaGrid() {
  std::vector<double> g(20);
  for (int i = 0; i < 20; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, -4.0 + 5.0 * i / 19.0);
  return g;
}

std::vector<double> defaultMuGrid() {
  std::vector<double> g;
  for (int i = 1; i <= 9; ++i) g.push_back(i / 10.0);
  return g;
}

FitResult fitCV(const SamplePath& path, int p, EstimatorKind estimator, const CvOptions& o) {
  if (o.folds < 2) throw InvalidInput("fitCV: need at least two folds");
  const LaggedDesign design = buildDesign(path, p);
  const int rows = design.rows();
  if (rows < o.folds)
    throw InvalidInput("fitCV: " + std::to_string(rows) + " design rows cannot fill " +
                       std::to_string(o.folds) + " folds");

  std::vector<int> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), 0);
  if (o.shuffle) {
    Rng rng = makeRng(o.seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<LaggedDesign> train, valid;
  for (int f = 0; f < o.folds; ++f) {
    const int lo = static_cast<int>(static_cast<long long>(rows) * f / o.folds);
    const int hi = static_cast<int>(static_cast<long long>(rows) * (f + 1) / o.folds);
    std::vector<int> in, out;
    for (int i = 0; i < rows; ++i) (i >= lo && i < hi ? out : in).push_back(order[static_cast<std::size_t>(i)]);
    std::sort(in.begin(), in.end());
    std::sort(out.begin(), out.end());
    train.push_back(design.subset(in));
    valid.push_back(design.subset(out));
  }
  const auto score = [&](double lambda, double mu) {
    double total = 0.0;
    for (int f = 0; f < o.folds; ++f)
      total += validationMse(solve(train[static_cast<std::size_t>(f)], estimator, lambda, mu, nullptr),
                             valid[static_cast<std::size_t>(f)]);
    return total / o.folds;
  };

  if (estimator == EstimatorKind::ols) {
    FitResult r = fitOLS(design);
    r.cvScore = score(0.0, 1.0);
    return r;
  }
  if (o.lambdaGrid.empty()) throw InvalidInput("fitCV: empty lambda grid");
  const std::vector<double> mus =
      estimator == EstimatorKind::elasticNet ? o.muGrid : std::vector<double>{1.0};
  if (mus.empty()) throw InvalidInput("fitCV: empty mixing grid");

  double best = std::numeric_limits<double>::infinity();
  double bestLambda = 0.0;
  double bestMu = mus.front();
  for (double mu : mus) {
    for (double lambda : o.lambdaGrid) {
      checkPenalty(lambda, mu);
      const double s = score(lambda, mu);
      const bool tie = std::abs(s - best) <= 1e-12 * std::max(1.0, std::abs(best));
      if ((s < best && !tie) || (tie && lambda > bestLambda)) {
        best = s;
        bestLambda = lambda;
        bestMu = mu;
      }
    }
  }
  FitResult r = fitRegularized(design, estimator, bestLambda, bestMu);
  r.cvScore = best;
  return r;
}

}  // namespace causalvar
