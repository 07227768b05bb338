// Generalized-alpha time stepping with Newton linearization and GMRES.
#pragma once

#include "pcaopt/block_matrix.hpp"
#include "pcaopt/gmres.hpp"
#include "pcaopt/spline_space.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcaopt {

struct AlphaScheme {
  double rho_inf = 0.5;
  double alpha_m = 5.0 / 6.0;
  double alpha_f = 2.0 / 3.0;
  double gamma = 2.0 / 3.0;
};

/// Throws std::invalid_argument for rho_inf outside [0, 1].
[[nodiscard]] AlphaScheme alpha_coeffs(double rho_inf);

struct SolverSettings {
  double eps_NL = 1e-3;
  double eps_L = 1e-3;
  int max_linear_iters = 500;
  int max_newton_iters = 25;
  double abs_guard = 1e-14;
  double roundoff_factor = 64.0;  // blocks below this many ulps of their term scale count as converged
  bool parallel = true;

  void validate() const;
};

struct StepStats {
  int newton_iters = 0;
  int linear_iters = 0;
  bool linear_capped = false;  // some GMRES solve hit its iteration cap
  std::vector<std::array<double, 3>> residual_history;  // block norms per Newton iteration
};

class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, StepStats stats)
      : std::runtime_error(what), stats_(std::move(stats)) {}
  [[nodiscard]] const StepStats& stats() const { return stats_; }

 private:
  StepStats stats_;
};

/// A semi-discrete system  R(Ydot, Y, t) = mass_sign * M Ydot + r(Y, t) = 0
/// with three fields; field 0 carries homogeneous Dirichlet constraints.
class AlphaSystem {
 public:
  virtual ~AlphaSystem() = default;
  /// +1 for forward problems, -1 for adjoint problems written as -M w_t + ...
  [[nodiscard]] virtual double mass_sign() const = 0;
  /// Full residual at the alpha-levels.
  virtual void residual(const Vec& Y, const Vec& Ydot, double t, Vec& R) = 0;
  /// dR/dY at the alpha-levels.
  virtual void jacobian(const Vec& Y, double t, BlockMatrix& J) = 0;
};

class AlphaStepper {
 public:
  AlphaStepper(const SplineSpace& space, AlphaScheme scheme, SolverSettings settings);

  /// Advances (Y, Ydot) from t to t + dt in place (dt may be negative).
  StepStats step(AlphaSystem& sys, Vec& Y, Vec& Ydot, double t, double dt);

  /// Ydot solving mass_sign * M Ydot = -r(Y, t) with Ydot = 0 on field-0 constraints.
  [[nodiscard]] Vec consistent_rate(AlphaSystem& sys, const Vec& Y, double t) const;

  [[nodiscard]] const AlphaScheme& scheme() const { return scheme_; }
  [[nodiscard]] const SolverSettings& settings() const { return settings_; }

 private:
  void zero_constrained(Vec& v) const;

  const SplineSpace* space_;
  AlphaScheme scheme_;
  SolverSettings settings_;
  BlockMatrix J_;
  BlockMatrix A_;
};

}  // namespace pcaopt
