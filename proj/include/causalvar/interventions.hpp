#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "causalvar/model.hpp"
#include "causalvar/seeding.hpp"
#include "causalvar/var_process.hpp"

namespace causalvar {

enum class InterventionKind { atomicFixed, atomicAveraged, relativeShift };

/// do(x_{t-omega, c} = ...) for c in `components` (0-based). `steps` > 1
/// extends the intervention to x_{t-omega-1}, ..., x_{t-omega-steps+1}.
struct InterventionSpec {
  InterventionKind kind = InterventionKind::atomicAveraged;
  int omega = 1;
  std::vector<int> components;
  /// atomicFixed: one value x* per entry of `components`, reused for every step.
  std::vector<double> values;
  /// relativeShift: added to each intervened value.
  double alpha = 0.0;
  int steps = 1;

  static InterventionSpec averaged(int omega, std::vector<int> components, int steps = 1);
  static InterventionSpec fixed(int omega, std::vector<int> components, std::vector<double> values,
                                int steps = 1);
  static InterventionSpec shift(int omega, std::vector<int> components, double alpha);

  /// Throws InvalidInput when inconsistent with a d-dimensional process.
  void validate(int d) const;
};

/// Positions in the stacked most-recent-first window (block 0 <-> x_{t-omega}).
std::vector<int> intervenedIndices(const InterventionSpec& spec, int d);

struct InterventionalCov {
  AutocovMatrix base;
  InterventionSpec spec;
  Eigen::MatrixXd dense;
};

/// Gamma (averaged) or Gamma' (fixed): intervened rows and columns lose their
/// off-diagonal entries; fixed kinds also replace the diagonal by x*^2.
InterventionalCov interventionalCov(const AutocovMatrix& sigma, const InterventionSpec& spec);

/// ω x d matrix of innovations, row s feeding step s.
Eigen::MatrixXd drawInnovations(const VarModel& model, int steps, Rng& rng);

/// Runs the structural equations forward from a stacked most-recent-first
/// window (at least p blocks) with the given innovations; returns the last
/// generated x. Zero rows give the plug-in ω-step predictor.
Eigen::VectorXd propagateWindow(const VarModel& model, const Eigen::VectorXd& window,
                                const Eigen::MatrixXd& innovations);

/// Source of atomicAveraged values: N(0, sd_c^2), or uniform resampling of
/// column c of `pool` when the pool is non-empty.
struct Marginal {
  Eigen::VectorXd sd;
  Eigen::MatrixXd pool;

  double draw(int component, Rng& rng) const;
};

/// Graph surgery on a stacked window in place. `marginalSd` holds the
/// stationary standard deviation of each component (atomicAveraged draws).
void applySurgery(Eigen::Ref<Eigen::VectorXd> window, const InterventionSpec& spec, int d,
                  const Marginal& marginal, Rng& rng);
void applySurgery(Eigen::Ref<Eigen::VectorXd> window, const InterventionSpec& spec, int d,
                  const Eigen::VectorXd& marginalSd, Rng& rng);

/// Chronological history (rows oldest first, last row x_{t-omega}) to stacked
/// window of `blocks` blocks, most recent first.
Eigen::VectorXd stackWindow(const Eigen::MatrixXd& history, int blocks);
Eigen::MatrixXd unstackWindow(const Eigen::VectorXd& window, int d);

struct IntervenedDraw {
  Eigen::MatrixXd history;  ///< conditioning window after surgery
  Eigen::VectorXd target;   ///< realized x_t
};

/// Applies the intervention to the last rows of `history` (which ends at
/// x_{t-omega}) and regenerates x_{t-omega+1}, ..., x_t with fresh noise.
/// Innovations are drawn before any intervention value, so a null shift
/// reproduces simulateForward under the same seed.
IntervenedDraw simulateIntervened(const VarModel& model, const InterventionSpec& spec,
                                  const Eigen::MatrixXd& history, std::uint64_t seed,
                                  const Eigen::VectorXd& marginalVariance = {});

/// Observational counterpart: x_t after `steps` structural steps from history.
Eigen::VectorXd simulateForward(const VarModel& model, const Eigen::MatrixXd& history, int steps,
                                std::uint64_t seed);

}  // namespace causalvar
