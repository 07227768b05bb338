#include "pcaopt/assembly.hpp"
#include "pcaopt/forward.hpp"

#include "doctest.h"

#include <random>

using namespace pcaopt;

namespace {

Vec random_state(const SplineSpace& s, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = s.num_basis();
  Vec Y(3 * n);
  for (int i = 0; i < 3 * n; ++i) Y[i] = u(rng);
  for (int d : s.boundary_dofs()) Y[d] = 0.0;
  return Y;
}

}  // namespace

TEST_CASE("healthy equilibrium is a fixed point of the residual") {
  const auto s = SplineSpace::build(6, 3000.0);
  ModelParams p;
  const Vec Y = healthy_equilibrium(s, p);
  const int n = s.num_basis();
  CHECK(Y.segment(n, n).mean() == doctest::Approx(1.0));
  CHECK(Y.segment(2 * n, n).mean() == doctest::Approx(p.alpha_h / p.gamma_p));
  Vec R;
  forward_residual(s, p, Y, Vec::Zero(3 * n), 0.0, 0.0, R);
  CHECK(R.lpNorm<Eigen::Infinity>() < 1e-13 * p.S_h * s.basis_integrals().maxCoeff());
}

TEST_CASE("constant fields reduce the PSA residual to a mass action") {
  const auto s = SplineSpace::build(4, 100.0);
  ModelParams p;
  const int n = s.num_basis();
  Vec Y(3 * n);
  Y.segment(0, n).setConstant(0.3);
  Y.segment(n, n).setConstant(0.7);
  Y.segment(2 * n, n).setConstant(0.2);
  Vec R;
  forward_residual(s, p, Y, Vec::Zero(3 * n), 0.0, 0.0, R);
  const Vec expect = s.basis_integrals() * (p.gamma_p * 0.2 - p.alpha_h - p.alpha_ch() * 0.3);
  CHECK((R.segment(2 * n, n) - expect).lpNorm<Eigen::Infinity>() < 1e-12 * expect.lpNorm<Eigen::Infinity>());
}

TEST_CASE("tangent blocks match central differences on a 4x4 grid") {
  const auto s = SplineSpace::build(4, 3000.0);
  ModelParams p;
  const int n = s.num_basis();
  const Vec Y = random_state(s, 3);
  const Vec Yd = Vec::Zero(3 * n);
  const double U = 0.007, S = 0.3;
  BlockMatrix J(s.pattern());
  forward_jacobian(s, p, Y, U, S, J);
  const Eigen::MatrixXd A = J.to_dense();
  const double h = 1e-6;
  double worst = 0.0;
  for (int j = 0; j < 3 * n; ++j) {
    Vec Yp = Y, Ym = Y;
    Yp[j] += h;
    Ym[j] -= h;
    Vec Rp, Rm;
    forward_residual(s, p, Yp, Yd, U, S, Rp);
    forward_residual(s, p, Ym, Yd, U, S, Rm);
    const Vec fd = (Rp - Rm) / (2.0 * h);
    const double scale = std::max(A.col(j).norm(), 1e-300);
    worst = std::max(worst, (A.col(j) - fd).norm() / scale);
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("adjoint operator is the transpose of the linearized operator") {
  const auto s = SplineSpace::build(4, 3000.0);
  ModelParams p;
  const int n = s.num_basis();
  const Vec Y = random_state(s, 11);
  BlockMatrix J(s.pattern()), G(s.pattern());
  forward_jacobian(s, p, Y, 0.004, 0.2, J);
  adjoint_operator(s, p, Y, 0.004, 0.2, G);
  std::mt19937 rng(5);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 3; ++trial) {
    Vec w(3 * n), y(3 * n);
    for (int i = 0; i < 3 * n; ++i) {
      w[i] = nd(rng);
      y[i] = nd(rng);
    }
    Vec Gw, Jy;
    G.apply(w, Gw);
    J.apply(y, Jy);
    const double lhs = Gw.dot(y), rhs = w.dot(Jy);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(std::abs(lhs), 1.0) * 1e3);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (Gw.norm() * y.norm()));
  }
}

TEST_CASE("colored and serial assembly agree bit for bit") {
  const auto s = SplineSpace::build(9, 3000.0);
  ModelParams p;
  const Vec Y = random_state(s, 2);
  const Vec Yd = random_state(s, 4);
  Vec Rc, Rs;
  forward_residual(s, p, Y, Yd, 0.01, 0.5, Rc, AssemblyMode::Colored);
  forward_residual(s, p, Y, Yd, 0.01, 0.5, Rs, AssemblyMode::Serial);
  CHECK((Rc - Rs).lpNorm<Eigen::Infinity>() == 0.0);
  BlockMatrix Jc(s.pattern()), Js(s.pattern());
  forward_jacobian(s, p, Y, 0.01, 0.5, Jc, AssemblyMode::Colored);
  forward_jacobian(s, p, Y, 0.01, 0.5, Js, AssemblyMode::Serial);
  CHECK((Jc.to_dense() - Js.to_dense()).lpNorm<Eigen::Infinity>() == 0.0);
  Vec a, b;
  Jc.apply(Y, a, true);
  Jc.apply(Y, b, false);
  CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);
  const Vec La = assemble_hprime_load(s, Y.head(s.num_basis()), p.M, AssemblyMode::Colored);
  const Vec Lb = assemble_hprime_load(s, Y.head(s.num_basis()), p.M, AssemblyMode::Serial);
  CHECK((La - Lb).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("block matrix apply matches the dense copy") {
  const auto s = SplineSpace::build(5, 1.0);
  ModelParams p;
  const Vec Y = random_state(s, 9);
  BlockMatrix J(s.pattern());
  forward_jacobian(s, p, Y, 0.0, 0.0, J);
  J.constrain(0, s.boundary_mask());
  Vec y;
  J.apply(Y, y);
  CHECK((J.to_dense() * Y - y).norm() <= 1e-12 * y.norm());
  const Vec d = J.diagonal();
  for (int b : s.boundary_dofs()) CHECK(d[b] == 1.0);
  const BlockMatrix T = transpose(s, J);
  CHECK((T.to_dense() - J.to_dense().transpose()).lpNorm<Eigen::Infinity>() == 0.0);
}
