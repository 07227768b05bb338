#include "pcaopt/forward.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pcaopt {

void InitialConditionSpec::validate() const {
  if (no_tumor) return;
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidParameter("initial ellipse semi-axes must be positive");
  if (!(sharpness > 0.0)) throw InvalidParameter("initial tanh sharpness must be positive");
  // the affine images must stay non-negative for phi in [0, 1]
  if (c0_sigma < 0.0 || c0_sigma + c1_sigma < 0.0) throw InvalidParameter("initial nutrient would be negative");
  if (c0_p < 0.0 || c0_p + c1_p < 0.0) throw InvalidParameter("initial PSA would be negative");
}

Vec make_initial_conditions(const SplineSpace& space, const InitialConditionSpec& spec) {
  spec.validate();
  const int n = space.num_basis();
  Vec phi = Vec::Zero(n);
  if (!spec.no_tumor) {
    const double c = 0.5 * space.side_length();
    const double a = spec.a;
    const double b = spec.b;
    const double k = spec.sharpness;
    phi = l2_project(
        space,
        [=](double x, double y) {
          const double r = std::sqrt((x - c) * (x - c) / (a * a) + (y - c) * (y - c) / (b * b));
          return 0.5 - 0.5 * std::tanh(k * (r - 1.0));
        },
        true);
    for (int d : space.boundary_dofs()) phi[d] = 0.0;
  }
  Vec Y(3 * n);
  Y.segment(0, n) = phi;
  Y.segment(n, n) = (spec.c0_sigma + spec.c1_sigma * phi.array()).matrix();
  Y.segment(2 * n, n) = (spec.c0_p + spec.c1_p * phi.array()).matrix();
  return Y;
}

Vec healthy_equilibrium(const SplineSpace& space, const ModelParams& params) {
  const int n = space.num_basis();
  Vec Y = Vec::Zero(3 * n);
  Y.segment(n, n).setConstant(params.S_h / params.gamma_h);
  Y.segment(2 * n, n).setConstant(params.alpha_h / params.gamma_p);
  return Y;
}

void FieldBounds::update(const SplineSpace& space, const Vec& Y) {
  const int n = space.num_basis();
  const FieldRange rp = quadrature_range(space, Y.segment(0, n));
  const FieldRange rs = quadrature_range(space, Y.segment(n, n));
  const FieldRange rq = quadrature_range(space, Y.segment(2 * n, n));
  phi_min = std::min(phi_min, rp.min);
  phi_max = std::max(phi_max, rp.max);
  sigma_min = std::min(sigma_min, rs.min);
  sigma_max = std::max(sigma_max, rs.max);
  p_min = std::min(p_min, rq.min);
  p_max = std::max(p_max, rq.max);
}

void FieldBounds::merge(const FieldBounds& o) {
  phi_min = std::min(phi_min, o.phi_min);
  phi_max = std::max(phi_max, o.phi_max);
  sigma_min = std::min(sigma_min, o.sigma_min);
  sigma_max = std::max(sigma_max, o.sigma_max);
  p_min = std::min(p_min, o.p_min);
  p_max = std::max(p_max, o.p_max);
}

ForwardSystem::ForwardSystem(const SplineSpace& space, const ModelParams& params,
                             const ControlTrajectory* controls, AssemblyMode mode)
    : space_(&space), params_(&params), controls_(controls), mode_(mode) {}

void ForwardSystem::residual(const Vec& Y, const Vec& Ydot, double t, Vec& R) {
  const double U = controls_ ? controls_->U_at(t) : 0.0;
  const double S = controls_ ? controls_->S_at(t) : 0.0;
  forward_residual(*space_, *params_, Y, Ydot, U, S, R, mode_);
}

void ForwardSystem::jacobian(const Vec& Y, double t, BlockMatrix& J) {
  const double U = controls_ ? controls_->U_at(t) : 0.0;
  const double S = controls_ ? controls_->S_at(t) : 0.0;
  forward_jacobian(*space_, *params_, Y, U, S, J, mode_);
}

int step_count(double T, double dt) {
  if (!(dt > 0.0)) throw InvalidParameter("time step must be positive");
  if (!(T >= 0.0)) throw InvalidParameter("final time must be non-negative");
  const double r = T / dt;
  const long n = std::lround(r);
  if (std::abs(r - static_cast<double>(n)) > 1e-9 * std::max(1.0, r)) {
    throw InvalidParameter("final time must be an integer multiple of the time step");
  }
  return static_cast<int>(n);
}

namespace {

void record(const SplineSpace& space, const ForwardOptions& opts, StateTrajectory& traj, int n, double t,
            const Vec& Y, const Vec& Yd, const StepObserver& observer) {
  const int nb = space.num_basis();
  traj.t.push_back(t);
  traj.v_phi.push_back(integrate_field(space, Y.segment(0, nb)));
  traj.P_s.push_back(integrate_field(space, Y.segment(2 * nb, nb)));
  if (opts.store) {
    traj.Y.push_back(Y);
    traj.Ydot.push_back(Yd);
  }
  if (opts.track_bounds) traj.bounds.update(space, Y);
  if (observer) observer(n, t, Y);
}

void march(const SplineSpace& space, AlphaSystem& sys, AlphaStepper& stepper, MarchState& s, int steps,
           const ForwardOptions& opts, StateTrajectory* traj, const StepObserver& observer) {
  if (traj) record(space, opts, *traj, 0, 0.0, s.Y, s.Ydot, observer);
  for (int n = 0; n < steps; ++n) {
    const double t = n * opts.dt;
    StepStats st;
    try {
      st = stepper.step(sys, s.Y, s.Ydot, t, opts.dt);
    } catch (const StepFailure& f) {
      throw StepFailure(std::string(f.what()) + " (step " + std::to_string(n + 1) + ")", f.stats());
    }
    if (traj) {
      traj->stats.newton_iters += st.newton_iters;
      traj->stats.linear_iters += st.linear_iters;
      if (st.linear_capped) ++traj->stats.capped_solves;
      record(space, opts, *traj, n + 1, (n + 1) * opts.dt, s.Y, s.Ydot, observer);
    }
  }
}

}  // namespace

MarchState pregrow(const SplineSpace& space, const Vec& Y0, const ModelParams& params, double duration,
                   const ForwardOptions& opts, StateTrajectory* history) {
  params.validate();
  const int steps = step_count(duration, opts.dt);
  ForwardSystem sys(space, params, nullptr, opts.mode);
  AlphaStepper stepper(space, opts.scheme, opts.solver);
  MarchState s{Y0, stepper.consistent_rate(sys, Y0, 0.0)};
  march(space, sys, stepper, s, steps, opts, history, {});
  if (history) history->final_state = s;
  return s;
}

StateTrajectory solve_forward(const SplineSpace& space, const MarchState& start, const ModelParams& params,
                              const ControlTrajectory& controls, double T, const ForwardOptions& opts,
                              const StepObserver& observer) {
  params.validate();
  const int steps = step_count(T, opts.dt);
  if (controls.t().front() > 1e-12 || controls.t().back() < T - 1e-9) {
    throw InvalidParameter("controls must cover the simulation interval [0, T]");
  }
  ForwardSystem sys(space, params, &controls, opts.mode);
  AlphaStepper stepper(space, opts.scheme, opts.solver);
  StateTrajectory traj;
  MarchState s = start;
  march(space, sys, stepper, s, steps, opts, &traj, observer);
  traj.final_state = std::move(s);
  return traj;
}

std::vector<QoiRow> qoi_series(const StateTrajectory& traj, double scale) {
  std::vector<QoiRow> rows;
  rows.reserve(traj.t.size());
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const auto q = quantities_of_interest(traj.P_s[i], traj.v_phi[i], scale);
    rows.push_back({traj.t[i], q.v_phi, q.P_s});
  }
  return rows;
}

}  // namespace pcaopt
