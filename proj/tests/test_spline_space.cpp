#include "pcaopt/spline_space.hpp"

#include "doctest.h"

#include <cmath>

using namespace pcaopt;

TEST_CASE("space dimensions") {
  CHECK(SplineSpace::build(4, 1.0).num_basis() == 36);
  CHECK(SplineSpace::build(256, 3000.0).num_basis() == 66564);
  CHECK_THROWS_AS((void)SplineSpace::build(3, 1.0), ConfigError);
  CHECK_THROWS_AS((void)SplineSpace::build(8, 0.0), ConfigError);
}

TEST_CASE("partition of unity and basis integrals") {
  const auto s = SplineSpace::build(6, 3.0);
  const Vec one = Vec::Ones(s.num_basis());
  CHECK(integrate_field(s, one) == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(integrate_field(s, Vec::Zero(s.num_basis())) == 0.0);
  CHECK(s.basis_integrals().sum() == doctest::Approx(9.0).epsilon(1e-14));
  for (double x : {0.0, 0.37, 1.5, 2.999, 3.0}) {
    for (double y : {0.0, 0.81, 2.2, 3.0}) CHECK(s.evaluate(one, x, y) == doctest::Approx(1.0).epsilon(1e-14));
  }
  double msum = 0.0;
  for (double v : s.mass()) msum += v;
  CHECK(msum == doctest::Approx(9.0).epsilon(1e-13));
  double ksum = 0.0;
  for (double v : s.stiffness()) ksum += v;
  CHECK(std::abs(ksum) < 1e-12);
}

TEST_CASE("linear and quadratic fields are reproduced exactly") {
  const auto s = SplineSpace::build(4, 2.0);
  const Vec lin = l2_project(s, [](double x, double) { return 3.0 * x - 1.0; });
  // ∫_0^2 ∫_0^2 (3x - 1) dy dx = 2 (6 - 2) = 8
  CHECK(integrate_field(s, lin) == doctest::Approx(8.0).epsilon(1e-12));
  auto quad = [](double x, double y) { return 1.0 + x * x - 0.5 * x * y + 2.0 * y * y; };
  const Vec q = l2_project(s, quad);
  double err = 0.0;
  for (double x = 0.0; x <= 2.0; x += 0.1) {
    for (double y = 0.0; y <= 2.0; y += 0.1) err = std::max(err, std::abs(s.evaluate(q, x, y) - quad(x, y)));
  }
  CHECK(err < 1e-10);
  const Vec ones = l2_project(s, [](double, double) { return 1.0; });
  CHECK((ones - Vec::Ones(s.num_basis())).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("integrate_product is the mass bilinear form") {
  const auto s = SplineSpace::build(5, 1.0);
  Vec a = Vec::LinSpaced(s.num_basis(), -1.0, 2.0);
  Vec b = a.array().sin();
  Vec Mb;
  csr_apply(s.pattern(), s.mass(), b, Mb);
  CHECK(integrate_product(s, a, b) == doctest::Approx(a.dot(Mb)).epsilon(1e-13));
}

TEST_CASE("boundary mask covers the outer ring") {
  const auto s = SplineSpace::build(4, 1.0);
  const int n1 = s.basis_per_side();
  CHECK(static_cast<int>(s.boundary_dofs().size()) == 4 * n1 - 4);
  Vec c = Vec::Ones(s.num_basis());
  for (int d : s.boundary_dofs()) c[d] = 0.0;
  CHECK(s.evaluate(c, 0.0, 0.5) == doctest::Approx(0.0));
  CHECK(s.evaluate(c, 0.5, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("colors partition the elements without shared basis functions") {
  const auto s = SplineSpace::build(7, 1.0);
  std::vector<int> seen(static_cast<std::size_t>(s.num_elements()), 0);
  for (const auto& color : s.colors()) {
    std::vector<int> touched(static_cast<std::size_t>(s.num_basis()), 0);
    for (int e : color) {
      ++seen[static_cast<std::size_t>(e)];
      for (int d : s.element_dofs(e)) CHECK(touched[static_cast<std::size_t>(d)]++ == 0);
    }
  }
  for (int v : seen) CHECK(v == 1);
}

TEST_CASE("mass solve with homogeneous boundary values") {
  const auto s = SplineSpace::build(6, 1.0);
  const double pi = std::acos(-1.0);
  const Vec c = l2_project(s, [pi](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); }, true);
  for (int d : s.boundary_dofs()) CHECK(c[d] == 0.0);
  CHECK(s.evaluate(c, 0.5, 0.5) == doctest::Approx(1.0).epsilon(2e-2));
  const auto r = quadrature_range(s, c);
  CHECK(r.max <= 1.05);
  CHECK(r.min >= -1e-3);
}
