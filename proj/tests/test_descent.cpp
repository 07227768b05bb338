#include "pcaopt/descent.hpp"

#include "doctest.h"

using namespace pcaopt;

namespace {

Gradient grad(std::vector<double> dU, std::vector<double> dS) {
  std::vector<double> t(dU.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.1 * static_cast<double>(i);
  return Gradient{t, std::move(dU), std::move(dS)};
}

ControlProblem small_problem(const SplineSpace& space) {
  ControlProblem pb;
  pb.space = &space;
  pb.T = 0.5;
  pb.forward.dt = 0.1;
  pb.forward.solver.eps_NL = 1e-10;
  pb.forward.solver.eps_L = 1e-12;
  pb.forward.solver.max_linear_iters = 2000;
  pb.start = pregrow(space, make_initial_conditions(space, InitialConditionSpec{}), pb.params, 0.0, pb.forward);
  pb.objective.area_scale = 1e-6;
  apply_default_targets(pb.objective, pb.params, space);
  return pb;
}

}  // namespace

TEST_CASE("pool argmin takes the first minimum") {
  CHECK(pool_argmin({3.0, 1.0, 2.0}) == 1);
  CHECK(pool_argmin({2.0, 1.0, 1.0}) == 1);
  CHECK(pool_argmin({0.5}) == 0);
}

TEST_CASE("stopping criteria") {
  const auto g0 = grad({1.0, 1.0, 1.0}, {2.0, 2.0, 2.0});
  CHECK_FALSE(criterion1(g0, g0, 1e-6));
  CHECK(criterion1(g0, grad({1e-4, 1e-4, 1e-4}, {1e-4, 1e-4, 1e-4}), 1e-6));
  CHECK_FALSE(criterion1(g0, grad({1e-4, 1e-4, 1e-4}, {1.0, 1.0, 1.0}), 1e-6));
  const auto zero = grad({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
  CHECK(criterion1(zero, zero, 1e-6));
  CHECK(criterion2(g0, g0, 1e-6));
  CHECK_FALSE(criterion2(g0, grad({1.1, 1.0, 1.0}, {2.0, 2.0, 2.0}), 1e-6));
}

TEST_CASE("projected step stays in the box") {
  const auto z = ControlTrajectory::zeros(0.2, 2, 0.012, 0.8);
  const ControlTrajectory c(z.t(), {0.0, 0.006, 0.012}, {0.0, 0.4, 0.8}, 0.012, 0.8);
  const auto g = grad({-1.0, 0.002, 1.0}, {1.0, -0.1, -1.0});
  const auto n = projected_step(c, g, 1.0);
  CHECK(n.U()[0] == 0.012);
  CHECK(n.U()[1] == doctest::Approx(0.004));
  CHECK(n.U()[2] == 0.0);
  CHECK(n.S()[0] == 0.0);
  CHECK(n.S()[1] == doctest::Approx(0.5));
  CHECK(n.S()[2] == 0.8);
  const auto same = projected_step(c, g, 0.0);
  CHECK(same.U() == c.U());
  CHECK(same.S() == c.S());
}

TEST_CASE("settings validation") {
  DescentSettings s;
  CHECK_NOTHROW(s.validate());
  s.pool_size = 0;
  CHECK_THROWS(s.validate());
  s = DescentSettings{};
  s.eps_sd1 = 0.0;
  CHECK_THROWS(s.validate());
}

TEST_CASE("descent on a small problem does not increase J") {
  const auto space = SplineSpace::build(8, 3000.0);
  const auto pb = small_problem(space);
  DescentSettings s;
  s.max_iters = 3;
  s.pool_size = 4;
  const auto init = ControlTrajectory::zeros(pb.T, 5, 0.012, 0.8);
  for (bool parallel : {true, false}) {
    s.parallel_pool = parallel;
    int calls = 0;
    const auto r = steepest_descent(pb, init, s, [&](const IterationLog&) { ++calls; });
    REQUIRE(r.log.size() >= 2);
    CHECK(calls == static_cast<int>(r.log.size()));
    for (std::size_t k = 1; k < r.log.size(); ++k) CHECK(r.log[k].J.total <= r.log[k - 1].J.total);
    CHECK(r.log.back().J.total < r.log.front().J.total);
    CHECK(r.iterations <= s.max_iters);
    if (r.reason == StopReason::MaxIterations) CHECK(r.iterations == s.max_iters);
    CHECK(r.log.back().criterion == r.reason);
    for (std::size_t i = 0; i < r.controls.size(); ++i) {
      CHECK(r.controls.U()[i] >= 0.0);
      CHECK(r.controls.U()[i] <= 0.012);
      CHECK(r.controls.S()[i] >= 0.0);
      CHECK(r.controls.S()[i] <= 0.8);
    }
    const auto J = evaluate_controls(pb, r.controls);
    CHECK(J.total == doctest::Approx(r.log.back().J.total).epsilon(1e-12));
  }
}

TEST_CASE("serial and parallel pools give the same iterates") {
  const auto space = SplineSpace::build(8, 3000.0);
  const auto pb = small_problem(space);
  DescentSettings s;
  s.max_iters = 2;
  s.pool_size = 3;
  const auto init = ControlTrajectory::zeros(pb.T, 5, 0.012, 0.8);
  s.parallel_pool = true;
  const auto a = steepest_descent(pb, init, s);
  s.parallel_pool = false;
  const auto b = steepest_descent(pb, init, s);
  CHECK(a.controls.U() == b.controls.U());
  CHECK(a.controls.S() == b.controls.S());
  CHECK(a.log.back().J.total == b.log.back().J.total);
}
