#include "pcaopt/model.hpp"

#include "doctest.h"

#include <cmath>
#include <functional>

using namespace pcaopt;

namespace {

double central(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("double well values") {
  auto d0 = eval_F_derivs(0.0, 2.5);
  CHECK(d0.d1 == 0.0);
  CHECK(d0.d2 == doctest::Approx(5.0));
  auto dh = eval_F_derivs(0.5, 2.5);
  CHECK(dh.d1 == doctest::Approx(0.0));
  CHECK(dh.d2 == doctest::Approx(-2.5));
  CHECK(eval_F_derivs(0.25, 2.5).d1 == doctest::Approx(0.46875).epsilon(1e-14));
  CHECK(eval_F_derivs(1.0, 2.5).d1 == 0.0);
}

TEST_CASE("interpolation function values") {
  CHECK(eval_h_derivs(0.0, 2.5).d1 == 0.0);
  CHECK(eval_h_derivs(1.0, 2.5).d1 == 0.0);
  CHECK(eval_h_derivs(1.0, 2.5).value == doctest::Approx(2.5));
  CHECK(eval_h_derivs(0.5, 2.5).d1 == doctest::Approx(3.75));
  CHECK(eval_h_derivs(0.5, 2.5).d2 == doctest::Approx(0.0));
}

TEST_CASE("closure derivatives match central differences") {
  const double M = 2.5;
  const double h = 1e-5;
  for (double phi = -0.2; phi <= 1.2; phi += 0.0371) {
    const auto F = eval_F_derivs(phi, M);
    const auto H = eval_h_derivs(phi, M);
    const double fd1 = central([&](double x) { return eval_F_derivs(x, M).value; }, phi, h);
    const double fd2 = central([&](double x) { return eval_F_derivs(x, M).d1; }, phi, h);
    const double hd1 = central([&](double x) { return eval_h_derivs(x, M).value; }, phi, h);
    const double hd2 = central([&](double x) { return eval_h_derivs(x, M).d1; }, phi, h);
    CHECK(std::abs(F.d1 - fd1) <= 1e-6 * std::max(std::abs(F.d1), 1e-3));
    CHECK(std::abs(F.d2 - fd2) <= 1e-6 * std::max(std::abs(F.d2), 1e-3));
    CHECK(std::abs(H.d1 - hd1) <= 1e-6 * std::max(std::abs(H.d1), 1e-3));
    CHECK(std::abs(H.d2 - hd2) <= 1e-6 * std::max(std::abs(H.d2), 1e-3));
  }
  ModelParams p;
  for (double s = -1.0; s <= 3.0; s += 0.173) {
    const double fd = central([&](double x) { return eval_m(x, p); }, s, 1e-5 * p.sigma_r);
    const double mp = eval_m_prime(s, p);
    CHECK(mp > 0.0);
    CHECK(std::abs(mp - fd) <= 1e-6 * mp);
  }
}

TEST_CASE("proliferation closure anchors") {
  ModelParams p;
  CHECK(eval_m(p.sigma_l, p) == doctest::Approx(p.m_ref * (p.rho() + p.A()) / 2.0));
  CHECK(eval_m(p.sigma_l, p) == doctest::Approx(1.3122619e-2).epsilon(1e-6));
  CHECK(eval_m(1e12, p) == doctest::Approx(p.m_ref * p.rho()).epsilon(1e-9));
  p.sigma_r = 0.0;
  CHECK_THROWS_AS((void)eval_m(0.5, p), InvalidParameter);
}

TEST_CASE("parameter validation") {
  ModelParams p;
  CHECK_NOTHROW(p.validate());
  p.gamma_p = -1.0;
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
}

TEST_CASE("reference protocol effects") {
  ModelParams p;
  CHECK(protocol_effect(docetaxel_standard(), 0.0, p.m_ref) == doctest::Approx(0.09003375).epsilon(1e-12));
  CHECK(protocol_effect(bevacizumab_standard(), 0.0, p.m_ref) == doctest::Approx(0.6).epsilon(1e-12));
  DrugProtocol late{DrugKind::Cytotoxic, {10.0, 5.0}, {2.0, 4.0}, 5.0, 1.59e-2, true};
  CHECK(protocol_effect(late, 1.999, p.m_ref) == 0.0);
  CHECK(protocol_effect(late, 2.0, p.m_ref) == doctest::Approx(p.m_ref * 1.59e-2 * 10.0));
  const double t = 6.0;
  const double expect = p.m_ref * 1.59e-2 * (10.0 * std::exp(-4.0 / 5.0) + 5.0 * std::exp(-2.0 / 5.0));
  CHECK(protocol_effect(late, t, p.m_ref) == doctest::Approx(expect).epsilon(1e-14));
  DrugProtocol bad = late;
  bad.tau = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
}

TEST_CASE("control trajectories enforce the box and interpolate linearly") {
  auto z = ControlTrajectory::zeros(1.0, 10, 0.012, 0.8);
  CHECK(z.size() == 11);
  CHECK(z.t().back() == doctest::Approx(1.0));
  std::vector<double> U(11, 0.0), S(11, 0.0);
  U[5] = 0.01;
  ControlTrajectory c(z.t(), U, S, 0.012, 0.8);
  CHECK(c.U_at(0.45) == doctest::Approx(0.005));
  CHECK(c.U_at(-1.0) == 0.0);
  CHECK(c.U_at(2.0) == 0.0);
  U[3] = 0.02;
  CHECK_THROWS_AS(ControlTrajectory(z.t(), U, S, 0.012, 0.8), InvalidParameter);
  U[3] = -1e-3;
  CHECK_THROWS_AS(ControlTrajectory(z.t(), U, S, 0.012, 0.8), InvalidParameter);
}

TEST_CASE("quantities of interest") {
  const auto q = quantities_of_interest(0.0625, 0.0);
  CHECK(q.P_s == doctest::Approx(0.0625));
  CHECK(q.v_phi == 0.0);
}
