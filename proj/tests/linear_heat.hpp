// Linear parabolic test system  M y' + kappa K y + c M y = f(t) ∫N  on each field.
#pragma once

#include "pcaopt/time_integrator.hpp"

#include <cmath>
#include <functional>

namespace pcaopt::testing {

class LinearHeat : public AlphaSystem {
 public:
  LinearHeat(const SplineSpace& space, double kappa, double c, std::function<double(double)> f)
      : space_(&space), kappa_(kappa), c_(c), f_(std::move(f)) {}
  [[nodiscard]] double mass_sign() const override { return 1.0; }
  void residual(const Vec& Y, const Vec& Ydot, double t, Vec& R) override {
    const int n = space_->num_basis();
    R.resize(3 * n);
    const double src = f_ ? f_(t) : 0.0;
    for (int b = 0; b < 3; ++b) {
      Vec m, k, md;
      csr_apply(space_->pattern(), space_->mass(), Y.segment(b * n, n), m);
      csr_apply(space_->pattern(), space_->stiffness(), Y.segment(b * n, n), k);
      csr_apply(space_->pattern(), space_->mass(), Ydot.segment(b * n, n), md);
      R.segment(b * n, n) = md + kappa_ * k + c_ * m - src * space_->basis_integrals();
    }
  }
  void jacobian(const Vec&, double, BlockMatrix& J) override {
    J = BlockMatrix(space_->pattern());
    for (int b = 0; b < 3; ++b) {
      auto& v = J.block(b, b);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = kappa_ * space_->stiffness()[k] + c_ * space_->mass()[k];
    }
  }

 private:
  const SplineSpace* space_;
  double kappa_;
  double c_;
  std::function<double(double)> f_;
};

/// March from Y0 over [0, T] with a consistent initial rate.
inline Vec march(const SplineSpace& space, AlphaSystem& sys, const Vec& Y0, double T, int steps, double rho_inf) {
  SolverSettings st;
  st.eps_NL = 1e-12;
  st.eps_L = 1e-13;
  st.max_linear_iters = 1000;
  AlphaStepper stepper(space, alpha_coeffs(rho_inf), st);
  Vec Y = Y0;
  Vec Yd = stepper.consistent_rate(sys, Y, 0.0);
  const double dt = T / steps;
  for (int n = 0; n < steps; ++n) stepper.step(sys, Y, Yd, n * dt, dt);
  return Y;
}

}  // namespace pcaopt::testing
