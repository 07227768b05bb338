// Projected steepest descent with a pool of step lengths.
#pragma once

#include "pcaopt/adjoint.hpp"

#include <functional>
#include <string>
#include <vector>

namespace pcaopt {

/// Everything needed to evaluate J for a control pair.
struct ControlProblem {
  const SplineSpace* space = nullptr;
  ModelParams params;
  MarchState start;  // state at the beginning of treatment
  double T = 21.0;
  ForwardOptions forward;
  ObjectiveSpec objective;
};

struct DescentSettings {
  int pool_size = 10;  // mu_j = j / pool_size
  double eps_sd1 = 1e-6;
  double eps_sd2 = 1e-6;
  int max_iters = 100;
  int safeguard_halvings = 2;
  bool parallel_pool = true;
  void validate() const;
};

enum class StopReason { None, Criterion1, Criterion2, Stagnation, MaxIterations };
[[nodiscard]] std::string to_string(StopReason r);

struct IterationLog {
  int iter = 0;
  ObjectiveBreakdown J;
  double norm_dU = 0.0;
  double norm_dS = 0.0;
  double mu_star = 0.0;  // step length that produced the next iterate, 0 on the last row
  StopReason criterion = StopReason::None;
};

struct DescentResult {
  ControlTrajectory controls;
  StateTrajectory forward;
  AdjointTrajectory adjoint;
  Gradient gradient;
  std::vector<IterationLog> log;
  StopReason reason = StopReason::None;
  int iterations = 0;  // accepted updates
};

/// Convergence tests on squared trapezoid norms.
[[nodiscard]] bool criterion1(const Gradient& g0, const Gradient& gk, double eps);
[[nodiscard]] bool criterion2(const Gradient& gprev, const Gradient& gk, double eps);

/// Index of the smallest value, first one on ties.
[[nodiscard]] std::size_t pool_argmin(const std::vector<double>& J);

/// Box-projected update U - mu dU, S - mu dS.
[[nodiscard]] ControlTrajectory projected_step(const ControlTrajectory& c, const Gradient& g, double mu);

/// Forward solve and objective value without storing the trajectory.
[[nodiscard]] ObjectiveBreakdown evaluate_controls(const ControlProblem& pb, const ControlTrajectory& c);

using IterationCallback = std::function<void(const IterationLog&)>;

[[nodiscard]] DescentResult steepest_descent(const ControlProblem& pb, const ControlTrajectory& initial,
                                             const DescentSettings& settings,
                                             const IterationCallback& on_iter = {});

}  // namespace pcaopt
