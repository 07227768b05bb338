// Forward simulation: initial conditions, untreated pre-growth, treated march.
#pragma once

#include "pcaopt/assembly.hpp"
#include "pcaopt/model.hpp"
#include "pcaopt/time_integrator.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace pcaopt {

struct InitialConditionSpec {
  double a = 150.0;  // semi-axis along x, um
  double b = 200.0;  // semi-axis along y, um
  double sharpness = 10.0;
  double c0_sigma = 1.0;
  double c1_sigma = -0.8;
  double c0_p = 0.0625;
  double c1_p = 0.7975;
  bool no_tumor = false;  // phi_0 = 0 identically

  void validate() const;
};

/// Stacked [phi | sigma | p] coefficients of the initial state.
[[nodiscard]] Vec make_initial_conditions(const SplineSpace& space, const InitialConditionSpec& spec);

/// Healthy steady state phi = 0, sigma = S_h/gamma_h, p = alpha_h/gamma_p.
[[nodiscard]] Vec healthy_equilibrium(const SplineSpace& space, const ModelParams& params);

/// Running min/max of each field over all quadrature points.
struct FieldBounds {
  double phi_min = std::numeric_limits<double>::infinity();
  double phi_max = -std::numeric_limits<double>::infinity();
  double sigma_min = std::numeric_limits<double>::infinity();
  double sigma_max = -std::numeric_limits<double>::infinity();
  double p_min = std::numeric_limits<double>::infinity();
  double p_max = -std::numeric_limits<double>::infinity();

  void update(const SplineSpace& space, const Vec& Y);
  void merge(const FieldBounds& o);
};

struct MarchStats {
  long newton_iters = 0;
  long linear_iters = 0;
  int capped_solves = 0;  // steps with a GMRES solve stopped by its iteration cap
};

struct ForwardOptions {
  AlphaScheme scheme = alpha_coeffs(0.5);
  SolverSettings solver;
  double dt = 0.1;
  AssemblyMode mode = AssemblyMode::Colored;
  bool store = true;          // keep every step in the trajectory
  bool track_bounds = true;
};

/// State and rate at the start of a march.
struct MarchState {
  Vec Y;
  Vec Ydot;
};

struct StateTrajectory {
  std::vector<double> t;
  std::vector<Vec> Y;     // empty unless ForwardOptions::store
  std::vector<Vec> Ydot;
  std::vector<double> v_phi;  // ∫ phi dx per step
  std::vector<double> P_s;    // ∫ p dx per step
  MarchState final_state;
  FieldBounds bounds;
  MarchStats stats;

  [[nodiscard]] std::size_t steps() const { return t.empty() ? 0 : t.size() - 1; }
};

/// Called after each accepted step (and once for the initial state, n = 0).
using StepObserver = std::function<void(int n, double t, const Vec& Y)>;

/// Number of steps of size dt in [0, T]; T must be a multiple of dt.
[[nodiscard]] int step_count(double T, double dt);

/// Untreated growth for `duration` days from Y0 with a consistent initial
/// rate. duration = 0 returns Y0 with its consistent rate.
[[nodiscard]] MarchState pregrow(const SplineSpace& space, const Vec& Y0, const ModelParams& params,
                                 double duration, const ForwardOptions& opts,
                                 StateTrajectory* history = nullptr);

/// Treated march over [0, T] from `start` (re-stamped as t = 0).
[[nodiscard]] StateTrajectory solve_forward(const SplineSpace& space, const MarchState& start,
                                            const ModelParams& params, const ControlTrajectory& controls,
                                            double T, const ForwardOptions& opts,
                                            const StepObserver& observer = {});

struct QoiRow {
  double t;
  double v_phi;
  double P_s;
};

/// (t, v_phi, P_s) per step; `scale` converts domain units to reporting units.
[[nodiscard]] std::vector<QoiRow> qoi_series(const StateTrajectory& traj, double scale = 1.0);

/// The forward residual as an AlphaSystem with time-dependent controls.
class ForwardSystem : public AlphaSystem {
 public:
  ForwardSystem(const SplineSpace& space, const ModelParams& params, const ControlTrajectory* controls,
                AssemblyMode mode);
  [[nodiscard]] double mass_sign() const override { return 1.0; }
  void residual(const Vec& Y, const Vec& Ydot, double t, Vec& R) override;
  void jacobian(const Vec& Y, double t, BlockMatrix& J) override;

 private:
  const SplineSpace* space_;
  const ModelParams* params_;
  const ControlTrajectory* controls_;
  AssemblyMode mode_;
};

}  // namespace pcaopt
