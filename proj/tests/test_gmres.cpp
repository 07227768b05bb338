#include "pcaopt/gmres.hpp"

#include "doctest.h"

#include <Eigen/Dense>

using namespace pcaopt;

namespace {

MatVec dense(const Eigen::MatrixXd& A) {
  return [A](const Vec& x, Vec& y) { y = A * x; };
}

}  // namespace

TEST_CASE("identity system converges in one iteration") {
  const int n = 7;
  Vec b = Vec::LinSpaced(n, 1.0, 3.0);
  const auto r = gmres_solve(dense(Eigen::MatrixXd::Identity(n, n)), b, Vec::Ones(n), 1e-12, 50);
  CHECK(r.ok());
  CHECK(r.iterations == 1);
  CHECK((r.x - b).norm() < 1e-14);
}

TEST_CASE("zero right-hand side") {
  const auto r = gmres_solve(dense(Eigen::MatrixXd::Identity(4, 4)), Vec::Zero(4), Vec::Ones(4), 1e-3, 50);
  CHECK(r.ok());
  CHECK(r.iterations == 0);
  CHECK(r.x.norm() == 0.0);
}

TEST_CASE("tridiagonal SPD system against a direct solve") {
  const int n = 10;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 4.0;
    if (i > 0) A(i, i - 1) = -1.0;
    if (i + 1 < n) A(i, i + 1) = -1.0;
  }
  Vec xs = Vec::LinSpaced(n, -1.0, 2.0);
  Vec b = A * xs;
  const auto r = gmres_solve(dense(A), b, A.diagonal(), 1e-3, 100);
  CHECK(r.ok());
  CHECK((r.x - xs).norm() / xs.norm() <= 1e-3);
  const auto tight = gmres_solve(dense(A), b, A.diagonal(), 1e-13, 100);
  CHECK((tight.x - xs).norm() / xs.norm() <= 1e-12);
}

TEST_CASE("nonsymmetric system and iteration cap") {
  const int n = 30;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A(i, i) = 2.0 + 0.1 * i;
    if (i > 0) A(i, i - 1) = -1.3;
    if (i + 2 < n) A(i, i + 2) = 0.4;
  }
  Vec b = Vec::Ones(n);
  const Vec x = A.partialPivLu().solve(b);
  const auto r = gmres_solve(dense(A), b, A.diagonal(), 1e-12, n);
  CHECK(r.ok());
  CHECK((r.x - x).norm() / x.norm() < 1e-10);
  const auto capped = gmres_solve(dense(A), b, A.diagonal(), 1e-12, 3);
  CHECK(capped.status == GmresStatus::MaxIterations);
  CHECK(capped.iterations == 3);
  for (std::size_t i = 1; i < r.residual_history.size(); ++i) {
    CHECK(r.residual_history[i] <= r.residual_history[i - 1] * (1.0 + 1e-12));
  }
}

TEST_CASE("non-finite input reports breakdown") {
  Vec b = Vec::Ones(3);
  b[1] = std::numeric_limits<double>::quiet_NaN();
  const auto r = gmres_solve(dense(Eigen::MatrixXd::Identity(3, 3)), b, Vec::Ones(3), 1e-6, 10);
  CHECK(r.status == GmresStatus::Breakdown);
}
