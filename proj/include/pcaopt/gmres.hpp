// Full (unrestarted) GMRES with a diagonal (Jacobi) left preconditioner.
#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace pcaopt {

using Vec = Eigen::VectorXd;
using MatVec = std::function<void(const Vec&, Vec&)>;

enum class GmresStatus {
  Converged,       // preconditioned relative residual <= tolerance
  HappyBreakdown,  // Krylov space became invariant; solution is exact
  MaxIterations,   // best iterate returned, tolerance not met
  Breakdown,       // non-finite values or singular Hessenberg system
};

[[nodiscard]] std::string to_string(GmresStatus s);

struct GmresResult {
  Vec x;
  GmresStatus status = GmresStatus::Converged;
  int iterations = 0;
  double rel_residual = 0.0;
  std::vector<double> residual_history;  // preconditioned residual estimates

  [[nodiscard]] bool ok() const {
    return status == GmresStatus::Converged || status == GmresStatus::HappyBreakdown;
  }
};

/// Solves A x = b starting from x = 0. Zero entries of `diag` are replaced
/// by 1 before preconditioning.
[[nodiscard]] GmresResult gmres_solve(const MatVec& apply, const Vec& rhs, const Vec& diag, double tol,
                                      int max_iters);

}  // namespace pcaopt
