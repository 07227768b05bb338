#include "pcaopt/time_integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pcaopt {

namespace {
constexpr double kEps = 2.220446049250313e-16;
}

AlphaScheme alpha_coeffs(double rho_inf) {
  if (!(rho_inf >= 0.0 && rho_inf <= 1.0)) {
    throw std::invalid_argument("rho_inf must lie in [0, 1]");
  }
  AlphaScheme s;
  s.rho_inf = rho_inf;
  s.alpha_m = 0.5 * (3.0 - rho_inf) / (1.0 + rho_inf);
  s.alpha_f = 1.0 / (1.0 + rho_inf);
  s.gamma = 0.5 + s.alpha_m - s.alpha_f;
  return s;
}

void SolverSettings::validate() const {
  if (!(eps_NL > 0.0) || !(eps_L > 0.0)) throw std::invalid_argument("solver tolerances must be positive");
  if (max_linear_iters < 1 || max_newton_iters < 1) {
    throw std::invalid_argument("solver iteration limits must be at least 1");
  }
}

AlphaStepper::AlphaStepper(const SplineSpace& space, AlphaScheme scheme, SolverSettings settings)
    : space_(&space), scheme_(scheme), settings_(settings), J_(space.pattern()), A_(space.pattern()) {
  settings_.validate();
}

void AlphaStepper::zero_constrained(Vec& v) const {
  for (int d : space_->boundary_dofs()) v[d] = 0.0;
}

Vec AlphaStepper::consistent_rate(AlphaSystem& sys, const Vec& Y, double t) const {
  const int n = space_->num_basis();
  Vec R;
  sys.residual(Y, Vec::Zero(3 * n), t, R);
  Vec Yd(3 * n);
  const double s = -1.0 / sys.mass_sign();
  for (int b = 0; b < 3; ++b) {
    Yd.segment(b * n, n) = s * mass_solve(*space_, R.segment(b * n, n), b == 0, 1e-13);
  }
  zero_constrained(Yd);
  return Yd;
}

StepStats AlphaStepper::step(AlphaSystem& sys, Vec& Y, Vec& Ydot, double t, double dt) {
  const int n = space_->num_basis();
  const double am = scheme_.alpha_m;
  const double af = scheme_.alpha_f;
  const double g = scheme_.gamma;
  const double t_alpha = t + af * dt;

  Vec Y1 = Y;
  Vec Yd1 = ((g - 1.0) / g) * Ydot;
  zero_constrained(Yd1);

  StepStats stats;
  std::array<double, 3> r0{};
  Vec R, Ya, Yda, rhs;
  const auto& mask = space_->boundary_mask();
  const double c_dot = am * sys.mass_sign();
  const double c_y = af * g * dt;

  std::array<double, 3> floor{};
  const auto& Mv = space_->mass();
  for (int it = 0;; ++it) {
    Ya = Y + af * (Y1 - Y);
    Yda = Ydot + am * (Yd1 - Ydot);
    sys.residual(Ya, Yda, t_alpha, R);
    zero_constrained(R);

    std::array<double, 3> rn{};
    for (int b = 0; b < 3; ++b) {
      rn[static_cast<std::size_t>(b)] = R.segment(b * n, n).norm();
      if (!std::isfinite(rn[static_cast<std::size_t>(b)])) {
        throw StepFailure("non-finite residual at t = " + std::to_string(t), stats);
      }
    }
    stats.residual_history.push_back(rn);
    if (it == 0) {
      r0 = rn;
      if (rn[0] < settings_.abs_guard && rn[1] < settings_.abs_guard && rn[2] < settings_.abs_guard) break;
    }

    if (it == 0) {
      sys.jacobian(Ya, t_alpha, J_);
      // round-off level of each block: eps * || |dR/dY| |Y| + |M| |Ydot| ||
      Vec scale, mb;
      J_.apply_abs(Ya.cwiseAbs(), scale);
      const Vec yd_abs = Yda.cwiseAbs();
      for (int b = 0; b < 3; ++b) {
        csr_apply(space_->pattern(), Mv, yd_abs.segment(b * n, n), mb);
        scale.segment(b * n, n) += mb;
      }
      zero_constrained(scale);
      for (int b = 0; b < 3; ++b) {
        floor[static_cast<std::size_t>(b)] = settings_.roundoff_factor * kEps * scale.segment(b * n, n).norm();
      }
    }
    bool converged = true;
    for (std::size_t b = 0; b < 3; ++b) {
      const double target = std::max({settings_.eps_NL * r0[b], floor[b], settings_.abs_guard});
      converged = converged && (r0[b] < settings_.abs_guard || rn[b] <= target);
    }
    if (converged) break;
    if (it >= settings_.max_newton_iters) {
      std::ostringstream os;
      os << "Newton did not converge in " << settings_.max_newton_iters << " iterations at t = " << t;
      throw StepFailure(os.str(), stats);
    }
    if (it > 0) sys.jacobian(Ya, t_alpha, J_);

    A_.clear();
    for (int bi = 0; bi < 3; ++bi) {
      for (int bj = 0; bj < 3; ++bj) {
        if (!J_.has(bi, bj)) continue;
        auto& dst = A_.block(bi, bj);
        const auto& src = J_.block(bi, bj);
        if (bi == bj) {
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = c_dot * Mv[k] + c_y * src[k];
        } else {
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = c_y * src[k];
        }
      }
    }
    for (int b = 0; b < 3; ++b) {
      if (!J_.has(b, b)) {
        auto& dst = A_.block(b, b);
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = c_dot * Mv[k];
      }
    }
    A_.constrain(0, mask);

    rhs = -R;
    const bool par = settings_.parallel;
    const GmresResult sol = gmres_solve([&](const Vec& x, Vec& y) { A_.apply(x, y, par); }, rhs,
                                        A_.diagonal(), settings_.eps_L, settings_.max_linear_iters);
    stats.linear_iters += sol.iterations;
    if (sol.status == GmresStatus::Breakdown) {
      throw StepFailure("GMRES breakdown at t = " + std::to_string(t), stats);
    }
    if (sol.status == GmresStatus::MaxIterations) stats.linear_capped = true;
    Yd1 += sol.x;
    Y1 += (g * dt) * sol.x;
    stats.newton_iters = it + 1;
  }

  Y = std::move(Y1);
  Ydot = std::move(Yd1);
  return stats;
}

}  // namespace pcaopt
