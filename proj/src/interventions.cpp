#include "causalvar/interventions.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "causalvar/error.hpp"

namespace causalvar {

InterventionSpec InterventionSpec::averaged(int omega, std::vector<int> components, int steps) {
  InterventionSpec s;
  s.kind = InterventionKind::atomicAveraged;
  s.omega = omega;
  s.components = std::move(components);
  s.steps = steps;
  return s;
}

InterventionSpec InterventionSpec::fixed(int omega, std::vector<int> components,
                                         std::vector<double> values, int steps) {
  InterventionSpec s;
  s.kind = InterventionKind::atomicFixed;
  s.omega = omega;
  s.components = std::move(components);
  s.values = std::move(values);
  s.steps = steps;
  return s;
}

InterventionSpec InterventionSpec::shift(int omega, std::vector<int> components, double alpha) {
  InterventionSpec s;
  s.kind = InterventionKind::relativeShift;
  s.omega = omega;
  s.components = std::move(components);
  s.alpha = alpha;
  return s;
}

void InterventionSpec::validate(int d) const {
  if (omega < 1) throw InvalidInput("intervention: omega must be >= 1");
  if (steps < 1) throw InvalidInput("intervention: steps must be >= 1");
  if (components.empty()) throw InvalidInput("intervention: no components");
  std::set<int> seen;
  for (int c : components) {
    if (c < 0 || c >= d)
      throw InvalidInput("intervention: component " + std::to_string(c + 1) + " outside [1," +
                         std::to_string(d) + "]");
    if (!seen.insert(c).second) throw InvalidInput("intervention: duplicate component");
  }
  switch (kind) {
    case InterventionKind::atomicFixed:
      if (values.size() != components.size())
        throw InvalidInput("intervention: atomicFixed needs one value per component");
      break;
    case InterventionKind::atomicAveraged:
      if (!values.empty()) throw InvalidInput("intervention: atomicAveraged carries no values");
      break;
    case InterventionKind::relativeShift:
      if (steps != 1) throw InvalidInput("intervention: relativeShift supports a single time step");
      break;
  }
  // Earlier intervened steps are parents of later non-intervened components,
  // which would change covariances the zeroing rule keeps.
  if (steps > 1 && static_cast<int>(components.size()) != d)
    throw InvalidInput("intervention: multi-step interventions must cover every component");
}

std::vector<int> intervenedIndices(const InterventionSpec& spec, int d) {
  std::vector<int> idx;
  for (int s = 0; s < spec.steps; ++s)
    for (int c : spec.components) idx.push_back(s * d + c);
  std::sort(idx.begin(), idx.end());
  return idx;
}

InterventionalCov interventionalCov(const AutocovMatrix& sigma, const InterventionSpec& spec) {
  const int d = sigma.dim();
  spec.validate(d);
  if (spec.kind == InterventionKind::relativeShift)
    throw InvalidInput("interventionalCov: only atomic interventions have a surgical covariance");
  if (spec.steps > sigma.blocks())
    throw InvalidInput("interventionalCov: intervention reaches beyond the covariance window");

  InterventionalCov out{sigma, spec, sigma.dense()};
  const Eigen::Index n = out.dense.rows();
  for (int s = 0; s < spec.steps; ++s) {
    for (std::size_t m = 0; m < spec.components.size(); ++m) {
      const Eigen::Index i = static_cast<Eigen::Index>(s) * d + spec.components[m];
      const double diag = spec.kind == InterventionKind::atomicFixed
                              ? spec.values[m] * spec.values[m]
                              : out.dense(i, i);
      out.dense.row(i).setZero();
      out.dense.col(i).setZero();
      out.dense(i, i) = diag;
    }
  }
  (void)n;
  return out;
}

Eigen::MatrixXd drawInnovations(const VarModel& model, int steps, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(model.noiseVariance()));
  Eigen::MatrixXd e(steps, model.dim());
  for (int s = 0; s < steps; ++s)
    for (int i = 0; i < model.dim(); ++i) e(s, i) = gauss(rng);
  return e;
}

Eigen::VectorXd propagateWindow(const VarModel& model, const Eigen::VectorXd& window,
                                const Eigen::MatrixXd& innovations) {
  const int d = model.dim();
  const int p = model.order();
  const Eigen::Index blocks = window.size() / d;
  if (window.size() % d != 0 || blocks < p)
    throw InvalidInput("propagateWindow: window must hold at least p blocks");
  const Eigen::Index steps = innovations.rows();
  if (steps == 0) return window.head(d);
  // buf holds, most recent first, the last p states.
  Eigen::VectorXd buf = window.head(static_cast<Eigen::Index>(p) * d);
  Eigen::VectorXd x(d);
  for (Eigen::Index s = 0; s < steps; ++s) {
    x = innovations.row(s).transpose();
    for (int l = 0; l < p; ++l)
      x.noalias() += model.coeffs()[static_cast<std::size_t>(l)] * buf.segment(static_cast<Eigen::Index>(l) * d, d);
    if (p > 1) {
      const Eigen::Index keep = static_cast<Eigen::Index>(p - 1) * d;
      buf.tail(keep) = buf.head(keep).eval();
    }
    buf.head(d) = x;
  }
  return x;
}

double Marginal::draw(int component, Rng& rng) const {
  if (pool.rows() > 0) {
    std::uniform_int_distribution<Eigen::Index> pick(0, pool.rows() - 1);
    return pool(pick(rng), component);
  }
  std::normal_distribution<double> stdNormal(0.0, 1.0);
  return sd(component) * stdNormal(rng);
}

void applySurgery(Eigen::Ref<Eigen::VectorXd> window, const InterventionSpec& spec, int d,
                  const Eigen::VectorXd& marginalSd, Rng& rng) {
  applySurgery(window, spec, d, Marginal{marginalSd, {}}, rng);
}

void applySurgery(Eigen::Ref<Eigen::VectorXd> window, const InterventionSpec& spec, int d,
                  const Marginal& marginal, Rng& rng) {
  for (int s = 0; s < spec.steps; ++s) {
    for (std::size_t m = 0; m < spec.components.size(); ++m) {
      const int c = spec.components[m];
      const Eigen::Index i = static_cast<Eigen::Index>(s) * d + c;
      switch (spec.kind) {
        case InterventionKind::atomicFixed: window(i) = spec.values[m]; break;
        case InterventionKind::atomicAveraged: window(i) = marginal.draw(c, rng); break;
        case InterventionKind::relativeShift: window(i) += spec.alpha; break;
      }
    }
  }
}

Eigen::VectorXd stackWindow(const Eigen::MatrixXd& history, int blocks) {
  const Eigen::Index len = history.rows();
  const Eigen::Index d = history.cols();
  if (blocks > len) throw InvalidInput("stackWindow: history shorter than window");
  Eigen::VectorXd y(blocks * d);
  for (int b = 0; b < blocks; ++b) y.segment(b * d, d) = history.row(len - 1 - b).transpose();
  return y;
}

Eigen::MatrixXd unstackWindow(const Eigen::VectorXd& window, int d) {
  const Eigen::Index blocks = window.size() / d;
  Eigen::MatrixXd h(blocks, d);
  for (Eigen::Index b = 0; b < blocks; ++b) h.row(blocks - 1 - b) = window.segment(b * d, d).transpose();
  return h;
}

IntervenedDraw simulateIntervened(const VarModel& model, const InterventionSpec& spec,
                                  const Eigen::MatrixXd& history, std::uint64_t seed,
                                  const Eigen::VectorXd& marginalVariance) {
  const int d = model.dim();
  spec.validate(d);
  if (history.cols() != d) throw InvalidInput("simulateIntervened: history dimension mismatch");
  const int len = static_cast<int>(history.rows());
  if (len < std::max(model.order(), spec.steps))
    throw InvalidInput("simulateIntervened: history must cover max(p, steps) time points");

  Eigen::VectorXd sd;
  if (spec.kind == InterventionKind::atomicAveraged) {
    const Eigen::VectorXd var = marginalVariance.size() == d
                                    ? marginalVariance
                                    : Eigen::VectorXd(exactAutocovLags(model, 1).front().diagonal());
    sd = var.cwiseSqrt();
  }

  Rng rng = makeRng(seed);
  const Eigen::MatrixXd innovations = drawInnovations(model, spec.omega, rng);
  Eigen::VectorXd window = stackWindow(history, len);
  applySurgery(window, spec, d, sd, rng);
  IntervenedDraw out;
  out.target = propagateWindow(model, window, innovations);
  out.history = unstackWindow(window, d);
  return out;
}

Eigen::VectorXd simulateForward(const VarModel& model, const Eigen::MatrixXd& history, int steps,
                                std::uint64_t seed) {
  if (history.cols() != model.dim()) throw InvalidInput("simulateForward: history dimension mismatch");
  if (history.rows() < model.order()) throw InvalidInput("simulateForward: history shorter than p");
  Rng rng = makeRng(seed);
  const Eigen::MatrixXd innovations = drawInnovations(model, steps, rng);
  return propagateWindow(model, stackWindow(history, static_cast<int>(history.rows())), innovations);
}

}  // namespace causalvar
