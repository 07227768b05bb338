#include "pcaopt/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pcaopt {

FrozenState::FrozenState(const StateTrajectory& traj, const ControlTrajectory& controls)
    : traj_(&traj), controls_(&controls) {
  if (traj.Y.size() != traj.t.size() || traj.t.size() < 2) {
    throw InvalidParameter("frozen state needs a stored forward trajectory");
  }
}

void FrozenState::state_at(double t, Vec& Y) const {
  const auto& ts = traj_->t;
  const double dt = ts[1] - ts[0];
  const auto last = static_cast<long>(ts.size()) - 2;
  const long i = std::clamp(static_cast<long>(std::floor((t - ts.front()) / dt)), 0L, last);
  const auto k = static_cast<std::size_t>(i);
  const double w = std::clamp((t - ts[k]) / (ts[k + 1] - ts[k]), 0.0, 1.0);
  Y = traj_->Y[k] + w * (traj_->Y[k + 1] - traj_->Y[k]);
}

namespace {

double p_target(const ObjectiveSpec& spec, const std::vector<double>& grid, double t) {
  if (spec.p_Omega_series.empty()) return spec.p_Omega;
  if (spec.p_Omega_series.size() != grid.size()) {
    throw InvalidParameter("PSA target series length differs from the time grid");
  }
  return interp_linear(grid, spec.p_Omega_series, t);
}

Vec apply_mass(const SplineSpace& space, const Vec& x) {
  Vec y;
  csr_apply(space.pattern(), space.mass(), x, y);
  return y;
}

}  // namespace

AdjointSystem::AdjointSystem(const SplineSpace& space, const ModelParams& params, const FrozenState& frozen,
                             const ObjectiveSpec& spec, AssemblyMode mode)
    : space_(&space),
      params_(&params),
      frozen_(&frozen),
      spec_(&spec),
      mode_(mode),
      k_(spec.effective_k()),
      ones_int_(space.basis_integrals()),
      G_(space.pattern()),
      cached_t_(0.0) {}

void AdjointSystem::prepare(double t) {
  if (cached_ && t == cached_t_) return;
  const int n = space_->num_basis();
  frozen_->state_at(t, Ystar_);
  adjoint_operator(*space_, *params_, Ystar_, frozen_->U_at(t), frozen_->S_at(t), G_, mode_);
  src_ = Vec::Zero(3 * n);
  if (k_[0] > 0.0) {
    const Vec d = (Ystar_.segment(0, n).array() - spec_->phi_Q).matrix();
    src_.segment(0, n) = k_[0] * apply_mass(*space_, d);
  }
  if (k_[3] > 0.0) {
    const double s = spec_->area_scale;
    const double e = s * integrate_field(*space_, Ystar_.segment(2 * n, n)) -
                     p_target(*spec_, frozen_->trajectory().t, t);
    if (e > 0.0) src_.segment(2 * n, n) = (k_[3] * e) * ones_int_;
  }
  cached_t_ = t;
  cached_ = true;
}

void AdjointSystem::residual(const Vec& W, const Vec& Wdot, double t, Vec& R) {
  prepare(t);
  const int n = space_->num_basis();
  G_.apply(W, R, true);
  Vec mw;
  for (int b = 0; b < 3; ++b) {
    csr_apply(space_->pattern(), space_->mass(), Wdot.segment(b * n, n), mw);
    R.segment(b * n, n) -= mw;
  }
  R -= src_;
}

void AdjointSystem::jacobian(const Vec&, double t, BlockMatrix& J) {
  prepare(t);
  J = G_;
}

Vec adjoint_terminal(const SplineSpace& space, const ObjectiveSpec& spec, const Vec& Y_T) {
  const int n = space.num_basis();
  const auto k = spec.effective_k();
  Vec load = Vec::Zero(n);
  if (k[1] > 0.0) {
    const Vec d = (Y_T.segment(0, n).array() - spec.phi_Omega).matrix();
    load += k[1] * apply_mass(space, d);
  }
  if (k[2] > 0.0) load += k[2] * space.basis_integrals();
  Vec W = Vec::Zero(3 * n);
  if (load.squaredNorm() > 0.0) W.segment(0, n) = mass_solve(space, load, true, 1e-13);
  W.segment(2 * n, n).setConstant(k[4]);
  return W;
}

AdjointTrajectory solve_adjoint(const SplineSpace& space, const ModelParams& params, const ObjectiveSpec& spec,
                                const StateTrajectory& forward, const ControlTrajectory& controls,
                                const ForwardOptions& opts) {
  spec.validate();
  const FrozenState frozen(forward, controls);
  AdjointSystem sys(space, params, frozen, spec, opts.mode);
  AlphaStepper stepper(space, opts.scheme, opts.solver);

  const std::size_t N = forward.t.size();
  AdjointTrajectory out;
  out.t = forward.t;
  out.W.resize(N);
  Vec W = adjoint_terminal(space, spec, forward.Y.back());
  Vec Wd = stepper.consistent_rate(sys, W, forward.t.back());
  out.W[N - 1] = W;
  for (std::size_t i = N - 1; i > 0; --i) {
    const double t1 = forward.t[i];
    const double dt = forward.t[i - 1] - t1;
    StepStats st;
    try {
      st = stepper.step(sys, W, Wd, t1, dt);
    } catch (const StepFailure& f) {
      throw StepFailure(std::string(f.what()) + " (adjoint step " + std::to_string(N - i) + ")", f.stats());
    }
    out.stats.newton_iters += st.newton_iters;
    out.stats.linear_iters += st.linear_iters;
    if (st.linear_capped) ++out.stats.capped_solves;
    out.W[i - 1] = W;
  }
  return out;
}

Gradient reduced_gradient(const SplineSpace& space, const ModelParams& params, const ObjectiveSpec& spec,
                          const StateTrajectory& forward, const AdjointTrajectory& adjoint,
                          const ControlTrajectory& controls) {
  const std::size_t N = forward.t.size();
  if (adjoint.W.size() != N || controls.size() != N) {
    throw InvalidParameter("gradient: forward, adjoint and control grids differ");
  }
  const int n = space.num_basis();
  const auto k = spec.effective_k();
  const double s = spec.area_scale;
  Gradient g;
  g.t = forward.t;
  g.dU.resize(N);
  g.dS.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const Vec& Y = forward.Y[i];
    const Vec& W = adjoint.W[i];
    const Vec phi = Y.segment(0, n);
    g.dU[i] = k[5] * controls.U()[i] - s * integrate_hprime_times(space, phi, W.segment(0, n), params.M);
    g.dS[i] = k[6] * controls.S()[i] - s * integrate_product(space, phi, W.segment(n, n));
  }
  return g;
}

TangentSystem::TangentSystem(const SplineSpace& space, const ModelParams& params, const FrozenState& frozen,
                             const ControlDirection& dir, AssemblyMode mode)
    : space_(&space),
      params_(&params),
      frozen_(&frozen),
      dir_(&dir),
      mode_(mode),
      J_(space.pattern()),
      cached_t_(0.0) {}

void TangentSystem::prepare(double t) {
  if (cached_ && t == cached_t_) return;
  const int n = space_->num_basis();
  frozen_->state_at(t, Ystar_);
  forward_jacobian(*space_, *params_, Ystar_, frozen_->U_at(t), frozen_->S_at(t), J_, mode_);
  src_ = Vec::Zero(3 * n);
  const Vec phi = Ystar_.segment(0, n);
  const double du = dir_->dU_at(t);
  const double ds = dir_->dS_at(t);
  if (du != 0.0) src_.segment(0, n) = du * assemble_hprime_load(*space_, phi, params_->M, mode_);
  if (ds != 0.0) src_.segment(n, n) = ds * apply_mass(*space_, phi);
  cached_t_ = t;
  cached_ = true;
}

void TangentSystem::residual(const Vec& dY, const Vec& dYdot, double t, Vec& R) {
  prepare(t);
  const int n = space_->num_basis();
  J_.apply(dY, R, true);
  Vec mv;
  for (int b = 0; b < 3; ++b) {
    csr_apply(space_->pattern(), space_->mass(), dYdot.segment(b * n, n), mv);
    R.segment(b * n, n) += mv;
  }
  R += src_;
}

void TangentSystem::jacobian(const Vec&, double t, BlockMatrix& J) {
  prepare(t);
  J = J_;
}

std::vector<Vec> solve_tangent(const SplineSpace& space, const ModelParams& params, const StateTrajectory& forward,
                               const ControlTrajectory& controls, const ControlDirection& dir,
                               const ForwardOptions& opts) {
  const FrozenState frozen(forward, controls);
  TangentSystem sys(space, params, frozen, dir, opts.mode);
  AlphaStepper stepper(space, opts.scheme, opts.solver);
  const std::size_t N = forward.t.size();
  const int n = space.num_basis();
  std::vector<Vec> out(N);
  Vec dY = Vec::Zero(3 * n);
  Vec dYd = Vec::Zero(3 * n);
  out[0] = dY;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    (void)stepper.step(sys, dY, dYd, forward.t[i], forward.t[i + 1] - forward.t[i]);
    out[i + 1] = dY;
  }
  return out;
}

double directional_derivative(const SplineSpace& space, const ObjectiveSpec& spec, const StateTrajectory& forward,
                              const std::vector<Vec>& tangent, const ControlTrajectory& controls,
                              const ControlDirection& dir) {
  const std::size_t N = forward.t.size();
  if (tangent.size() != N) throw InvalidParameter("tangent and forward grids differ");
  const int n = space.num_basis();
  const auto k = spec.effective_k();
  const double s = spec.area_scale;
  std::vector<double> track(N), excess(N), uu(N), ss(N);
  for (std::size_t i = 0; i < N; ++i) {
    const Vec& Y = forward.Y[i];
    const Vec& dY = tangent[i];
    const Vec dq = (Y.segment(0, n).array() - spec.phi_Q).matrix();
    track[i] = integrate_product(space, dq, dY.segment(0, n));
    const double e = std::max(0.0, s * integrate_field(space, Y.segment(2 * n, n)) - spec.p_Omega_at(i));
    excess[i] = e * s * integrate_field(space, dY.segment(2 * n, n));
    uu[i] = controls.U()[i] * dir.dU_at(forward.t[i]);
    ss[i] = controls.S()[i] * dir.dS_at(forward.t[i]);
  }
  const Vec& YT = forward.Y.back();
  const Vec& dT = tangent.back();
  const Vec dO = (YT.segment(0, n).array() - spec.phi_Omega).matrix();
  double v = k[0] * s * trapezoid(forward.t, track);
  v += k[1] * s * integrate_product(space, dO, dT.segment(0, n));
  v += k[2] * s * integrate_field(space, dT.segment(0, n));
  v += k[3] * trapezoid(forward.t, excess);
  v += k[4] * s * integrate_field(space, dT.segment(2 * n, n));
  v += k[5] * trapezoid(forward.t, uu);
  v += k[6] * trapezoid(forward.t, ss);
  return v;
}

double directional_derivative(const Gradient& g, const ControlDirection& dir) {
  std::vector<double> f(g.t.size());
  for (std::size_t i = 0; i < g.t.size(); ++i) {
    f[i] = g.dU[i] * dir.dU_at(g.t[i]) + g.dS[i] * dir.dS_at(g.t[i]);
  }
  return trapezoid(g.t, f);
}

double l2_norm_sq(const std::vector<double>& t, const std::vector<double>& v) {
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = v[i] * v[i];
  return trapezoid(t, sq);
}

double project_box(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

double KktReport::worst() const {
  return std::max({U_interior, U_lower, U_upper, S_interior, S_lower, S_upper});
}

namespace {

void classify(const std::vector<double>& c, const std::vector<double>& d, double cmax, double k, double& interior,
              double& lower, double& upper, int& active, double& residual) {
  const double tol = 1e-12 * std::max(cmax, 1.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] <= tol) {
      lower = std::max(lower, -d[i]);
      ++active;
    } else if (c[i] >= cmax - tol) {
      upper = std::max(upper, d[i]);
      ++active;
    } else {
      interior = std::max(interior, std::abs(d[i]));
    }
    if (k > 0.0) residual = std::max(residual, std::abs(c[i] - project_box(c[i] - d[i] / k, 0.0, cmax)));
  }
}

}  // namespace

KktReport verify_kkt(const ObjectiveSpec& spec, const ControlTrajectory& controls, const Gradient& g) {
  if (g.dU.size() != controls.size()) throw InvalidParameter("KKT check: gradient and control grids differ");
  const auto k = spec.effective_k();
  KktReport r;
  classify(controls.U(), g.dU, controls.U_max(), k[5], r.U_interior, r.U_lower, r.U_upper, r.U_active,
           r.U_residual);
  classify(controls.S(), g.dS, controls.S_max(), k[6], r.S_interior, r.S_lower, r.S_upper, r.S_active,
           r.S_residual);
  return r;
}

}  // namespace pcaopt
