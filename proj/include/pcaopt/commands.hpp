// Pipeline assembly from a RunConfig and the CLI subcommands.
#pragma once

#include "pcaopt/output.hpp"

#include <memory>
#include <string>
#include <vector>

namespace pcaopt {

[[nodiscard]] SolverSettings solver_settings(const SolverConfig& c);
[[nodiscard]] ForwardOptions forward_options(const RunConfig& cfg);
/// Objective weights and targets; p_Omega defaults to the healthy level.
[[nodiscard]] ObjectiveSpec objective_spec(const RunConfig& cfg, const SplineSpace& space);
/// Initial guess sampled on the treatment grid: the reference protocols
/// clamped to the control box, zero, or the box maximum.
[[nodiscard]] ControlTrajectory initial_controls(const RunConfig& cfg);

/// Space, treatment start state and control problem of a run.
struct Pipeline {
  std::unique_ptr<SplineSpace> space;
  ControlProblem problem;
  ControlTrajectory initial;
};

/// Builds the space, projects the initial condition and runs the pre-growth.
[[nodiscard]] Pipeline make_pipeline(const RunConfig& cfg);

/// Reads a `t,U,S` CSV on the treatment grid of `cfg`.
[[nodiscard]] ControlTrajectory read_controls(const std::string& path, const RunConfig& cfg);

struct GradientCheckRow {
  int level = 0;
  int elements = 0;
  double dt = 0.0;
  std::string direction;  // "smooth" or "zero"
  double eps = 0.0;
  double fd = 0.0;
  double adjoint = 0.0;
  double tangent = 0.0;
  double err_adjoint = 0.0;  // relative to |fd|, absolute when fd = 0
  double err_tangent = 0.0;
  double tangent_vs_adjoint = 0.0;
};

/// Central differences of J against the adjoint and tangent derivatives on
/// the gradient_check grid, refined `refinements` times in dt and h together.
[[nodiscard]] std::vector<GradientCheckRow> gradient_check(const RunConfig& cfg);

/// Smooth seeded direction on a grid: a short cosine series scaled by the box.
[[nodiscard]] ControlDirection smooth_direction(const std::vector<double>& t, double T, double U_max,
                                                double S_max, unsigned seed);

void cmd_forward(const RunConfig& cfg);
void cmd_optimize(const RunConfig& cfg);
void cmd_fit_protocol(const RunConfig& cfg);
void cmd_gradient_check(const RunConfig& cfg);
void cmd_export_snapshots(const RunConfig& cfg);

}  // namespace pcaopt
