// Galerkin residuals and tangents of the state and adjoint systems.
//
// State vectors stack three fields of length n_b: [phi | sigma | p] for the
// forward problem and [w | z | q] for the adjoint problem.
#pragma once

#include "pcaopt/block_matrix.hpp"
#include "pcaopt/model.hpp"
#include "pcaopt/spline_space.hpp"

namespace pcaopt {

enum class AssemblyMode {
  Colored,  // element colors processed in order, elements within a color in parallel
  Serial,   // same color order on one thread (reference)
};

/// Quadrature-point coefficients of the four solution-dependent mass blocks.
struct WeightedMasses {
  std::vector<double> phiphi;  // F'' + h''(U - m)
  std::vector<double> phisig;  // -h' m'
  std::vector<double> sigphi;  // gamma_ch sigma + S - S_ch
  std::vector<double> sigsig;  // gamma_h + gamma_ch phi
};

/// Element loop for the non-polynomial terms of the phi and sigma equations.
/// Fills load_phi_A = ∫ N_A (F'(phi) + h'(phi)(U - m(sigma))) and
/// load_sig_A = ∫ N_A (gamma_h sigma + gamma_ch sigma phi - S_h(1-phi) - (S_c-S) phi).
/// When `W` is non-null the weighted mass blocks are assembled as well.
void assemble_reaction(const SplineSpace& space, const ModelParams& params, const Vec& phi,
                       const Vec& sigma, double U, double S, Vec* load_phi, Vec* load_sig,
                       WeightedMasses* W, AssemblyMode mode = AssemblyMode::Colored);

/// Only the weighted mass blocks.
void assemble_weights(const SplineSpace& space, const ModelParams& params, const Vec& phi,
                      const Vec& sigma, double U, double S, WeightedMasses& W,
                      AssemblyMode mode = AssemblyMode::Colored);

/// ∫ N_A h'(phi).
[[nodiscard]] Vec assemble_hprime_load(const SplineSpace& space, const Vec& phi, double M,
                                       AssemblyMode mode = AssemblyMode::Colored);
/// ∫ h'(phi) w dx.
[[nodiscard]] double integrate_hprime_times(const SplineSpace& space, const Vec& phi, const Vec& w,
                                            double M);

/// Forward residual at (Y, Ydot) with controls (U, S). Rows of constrained
/// phi coefficients are left unmodified; callers zero them.
void forward_residual(const SplineSpace& space, const ModelParams& params, const Vec& Y,
                      const Vec& Ydot, double U, double S, Vec& R,
                      AssemblyMode mode = AssemblyMode::Colored);

/// dR/dY of the forward residual (dR/dYdot is the block-diagonal mass matrix).
void forward_jacobian(const SplineSpace& space, const ModelParams& params, const Vec& Y, double U,
                      double S, BlockMatrix& J, AssemblyMode mode = AssemblyMode::Colored);

/// dR/dY of the adjoint residual, i.e. the transpose of the forward dR/dY at
/// the frozen state Y.
void adjoint_operator(const SplineSpace& space, const ModelParams& params, const Vec& Y, double U,
                      double S, BlockMatrix& G, AssemblyMode mode = AssemblyMode::Colored);

/// Transpose of a block matrix on the symmetric spline pattern.
[[nodiscard]] BlockMatrix transpose(const SplineSpace& space, const BlockMatrix& A);

}  // namespace pcaopt
