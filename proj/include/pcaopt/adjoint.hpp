// Adjoint march, reduced gradient, tangent linearization and KKT checks.
#pragma once

#include "pcaopt/objective.hpp"

#include <vector>

namespace pcaopt {

/// Stored forward trajectory evaluated at arbitrary times by linear
/// interpolation between steps.
class FrozenState {
 public:
  FrozenState(const StateTrajectory& traj, const ControlTrajectory& controls);
  void state_at(double t, Vec& Y) const;
  [[nodiscard]] double U_at(double t) const { return controls_->U_at(t); }
  [[nodiscard]] double S_at(double t) const { return controls_->S_at(t); }
  [[nodiscard]] const StateTrajectory& trajectory() const { return *traj_; }

 private:
  const StateTrajectory* traj_;
  const ControlTrajectory* controls_;
};

/// Backward-in-time adjoint residual -M Wdot + G(Y*(t)) W - src(t).
class AdjointSystem : public AlphaSystem {
 public:
  AdjointSystem(const SplineSpace& space, const ModelParams& params, const FrozenState& frozen,
                const ObjectiveSpec& spec, AssemblyMode mode);
  [[nodiscard]] double mass_sign() const override { return -1.0; }
  void residual(const Vec& W, const Vec& Wdot, double t, Vec& R) override;
  void jacobian(const Vec& W, double t, BlockMatrix& J) override;

 private:
  void prepare(double t);

  const SplineSpace* space_;
  const ModelParams* params_;
  const FrozenState* frozen_;
  const ObjectiveSpec* spec_;
  AssemblyMode mode_;
  std::array<double, 7> k_;
  Vec ones_int_;
  BlockMatrix G_;
  Vec src_;
  Vec Ystar_;
  double cached_t_;
  bool cached_ = false;
};

struct AdjointTrajectory {
  std::vector<double> t;
  std::vector<Vec> W;  // [w | z | q] per step, same grid as the forward march
  MarchStats stats;
};

/// Terminal data W(T) = (w_T, 0, k5) with M w_T = k2 M (phi_T - phi_Omega) + k3 ∫N.
[[nodiscard]] Vec adjoint_terminal(const SplineSpace& space, const ObjectiveSpec& spec, const Vec& Y_T);

/// Integrates the adjoint problem from T back to 0.
[[nodiscard]] AdjointTrajectory solve_adjoint(const SplineSpace& space, const ModelParams& params,
                                              const ObjectiveSpec& spec, const StateTrajectory& forward,
                                              const ControlTrajectory& controls, const ForwardOptions& opts);

struct Gradient {
  std::vector<double> t;
  std::vector<double> dU;  // k6 U - s ∫ h'(phi) w
  std::vector<double> dS;  // k7 S - s ∫ phi z
};

[[nodiscard]] Gradient reduced_gradient(const SplineSpace& space, const ModelParams& params,
                                        const ObjectiveSpec& spec, const StateTrajectory& forward,
                                        const AdjointTrajectory& adjoint, const ControlTrajectory& controls);

/// Perturbation of the controls on the control grid (no sign constraint).
struct ControlDirection {
  std::vector<double> t;
  std::vector<double> dU;
  std::vector<double> dS;
  [[nodiscard]] double dU_at(double time) const { return interp_linear(t, dU, time); }
  [[nodiscard]] double dS_at(double time) const { return interp_linear(t, dS, time); }
};

/// Linearized forward march M dYdot + J(Y*) dY + [dU ∫N h'(phi*); dS M phi*; 0] = 0
/// from zero data.
class TangentSystem : public AlphaSystem {
 public:
  TangentSystem(const SplineSpace& space, const ModelParams& params, const FrozenState& frozen,
                const ControlDirection& dir, AssemblyMode mode);
  [[nodiscard]] double mass_sign() const override { return 1.0; }
  void residual(const Vec& dY, const Vec& dYdot, double t, Vec& R) override;
  void jacobian(const Vec& dY, double t, BlockMatrix& J) override;

 private:
  void prepare(double t);

  const SplineSpace* space_;
  const ModelParams* params_;
  const FrozenState* frozen_;
  const ControlDirection* dir_;
  AssemblyMode mode_;
  BlockMatrix J_;
  Vec src_;
  Vec Ystar_;
  double cached_t_;
  bool cached_ = false;
};

[[nodiscard]] std::vector<Vec> solve_tangent(const SplineSpace& space, const ModelParams& params,
                                             const StateTrajectory& forward, const ControlTrajectory& controls,
                                             const ControlDirection& dir, const ForwardOptions& opts);

/// Directional derivative of J along `dir` from the tangent trajectory.
[[nodiscard]] double directional_derivative(const SplineSpace& space, const ObjectiveSpec& spec,
                                            const StateTrajectory& forward, const std::vector<Vec>& tangent,
                                            const ControlTrajectory& controls, const ControlDirection& dir);

/// The same derivative through the reduced gradient: ∫ dU u + dS s dt.
[[nodiscard]] double directional_derivative(const Gradient& g, const ControlDirection& dir);

/// Squared trapezoid L2 norm.
[[nodiscard]] double l2_norm_sq(const std::vector<double>& t, const std::vector<double>& v);

[[nodiscard]] double project_box(double v, double lo, double hi);

struct KktReport {
  // Per control, worst violation in each regime of the projection condition.
  double U_interior = 0.0;   // |dU| where 0 < U < U_max
  double U_lower = 0.0;      // max(0, -dU) where U = 0
  double U_upper = 0.0;      // max(0, dU) where U = U_max
  double S_interior = 0.0;
  double S_lower = 0.0;
  double S_upper = 0.0;
  int U_active = 0;          // samples on a bound
  int S_active = 0;
  double U_residual = 0.0;   // max |U - Proj(U - dU / k6)|
  double S_residual = 0.0;
  [[nodiscard]] double worst() const;
};

[[nodiscard]] KktReport verify_kkt(const ObjectiveSpec& spec, const ControlTrajectory& controls, const Gradient& g);

}  // namespace pcaopt
