#include "pcaopt/protocol_fit.hpp"

#include "doctest.h"

using namespace pcaopt;

namespace {

FitProblem problem_from(FitTemplate tmpl, const ParamVec& theta, double step = 0.002) {
  FitProblem pb;
  pb.tmpl = tmpl;
  const int n = static_cast<int>(std::lround(21.0 / step));
  for (int i = 0; i <= n; ++i) pb.t.push_back(step * i);
  pb.target.assign(pb.t.size(), 0.0);
  const Eigen::VectorXd y = model_curve(pb, theta);
  for (std::size_t i = 0; i < pb.t.size(); ++i) pb.target[i] = y[static_cast<Eigen::Index>(i)];
  return pb;
}

ParamVec params(std::initializer_list<double> v) {
  ParamVec p(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

}  // namespace

TEST_CASE("goodness of fit") {
  const auto g = goodness_of_fit({0.0, 1.0, 2.0}, {0.0, 1.0, 1.0});
  CHECK(g.rmse == doctest::Approx(0.57735).epsilon(1e-5));
  CHECK(g.r2 == doctest::Approx(0.5));
  CHECK(goodness_of_fit({1.0, 3.0, 2.0}, {1.0, 3.0, 2.0}).r2 == 1.0);
  CHECK(goodness_of_fit({1.0, 3.0, 2.0}, {2.0, 2.0, 2.0}).r2 == doctest::Approx(0.0));
  const auto flat = goodness_of_fit({1.0, 1.0}, {1.0, 2.0});
  CHECK_FALSE(flat.r2_defined);
  CHECK_THROWS((void)goodness_of_fit({1.0, 2.0}, {1.0}));
}

TEST_CASE("template parameter layout") {
  CHECK(default_start(FitTemplate::Docetaxel1).size() == 1);
  CHECK(default_start(FitTemplate::NewDrug1).size() == 2);
  CHECK(default_start(FitTemplate::Docetaxel3).size() == 5);
  CHECK(default_start(FitTemplate::NewDrug3).size() == 6);
  FitProblem pb;
  pb.tmpl = FitTemplate::NewDrug3;
  const auto th = params({58.49, 9.20, 5.03, 2.85, 7.90, 9.16});
  const auto p = to_protocol(pb, th);
  CHECK(p.delivery_times == std::vector<double>{0.0, 2.85, 7.90});
  CHECK(p.tau == 9.16);
  CHECK(from_protocol(FitTemplate::NewDrug3, p) == th);
}

TEST_CASE("curve Jacobian matches central differences") {
  for (auto [tmpl, th] : {std::pair{FitTemplate::Docetaxel1, params({60.0})},
                          std::pair{FitTemplate::NewDrug1, params({60.0, 7.0})},
                          std::pair{FitTemplate::Docetaxel3, params({30.0, 20.0, 10.0, 5.33, 12.77})},
                          std::pair{FitTemplate::NewDrug3, params({58.49, 9.20, 5.03, 2.85, 7.93, 9.16})}}) {
    const auto pb = problem_from(tmpl, th, 0.1);
    const Eigen::MatrixXd J = model_jacobian(pb, th);
    for (Eigen::Index k = 0; k < th.size(); ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(th[k]));
      ParamVec p = th, m = th;
      p[k] += h;
      m[k] -= h;
      const Eigen::VectorXd fd = (model_curve(pb, p) - model_curve(pb, m)) / (2.0 * h);
      CHECK((J.col(k) - fd).norm() <= 1e-5 * std::max(fd.norm(), 1e-12));
    }
  }
}

TEST_CASE("generating parameters reproduce the curve") {
  const auto th = params({58.49, 9.20, 5.03, 2.85, 7.90, 9.16});
  const auto pb = problem_from(FitTemplate::NewDrug3, th);
  const Eigen::VectorXd y = model_curve(pb, th);
  std::vector<double> model(y.data(), y.data() + y.size());
  CHECK(goodness_of_fit(pb.target, model).rmse < 1e-10);
}

TEST_CASE("one-dose round trip") {
  const auto pb = problem_from(FitTemplate::Docetaxel1, params({82.53}));
  const auto r = fit_protocol(pb);
  CHECK(r.converged);
  CHECK(r.theta[0] == doctest::Approx(82.53).epsilon(1e-3));
  for (std::size_t k = 1; k < r.cost_history.size(); ++k) CHECK(r.cost_history[k] <= r.cost_history[k - 1]);
}

TEST_CASE("new-drug one-dose round trip recovers the decay time") {
  const auto pb = problem_from(FitTemplate::NewDrug1, params({40.0, 9.0}));
  const auto r = fit_protocol(pb);
  CHECK(r.theta[0] == doctest::Approx(40.0).epsilon(1e-3));
  CHECK(r.theta[1] == doctest::Approx(9.0).epsilon(1e-3));
}

TEST_CASE("three-dose round trip through all templates") {
  const auto th = params({58.49, 9.20, 5.03, 2.85, 7.90, 9.16});
  const auto pb = problem_from(FitTemplate::NewDrug3, th, 0.01);
  const auto all = fit_all_templates(pb);
  REQUIRE(all.size() == 4);
  const auto& best = all[3];
  CHECK(best.tmpl == FitTemplate::NewDrug3);
  for (Eigen::Index k = 0; k < th.size(); ++k) CHECK(best.theta[k] == doctest::Approx(th[k]).epsilon(1e-3));
  CHECK(best.gof.rmse <= all[0].gof.rmse);
  CHECK(best.gof.rmse <= all[2].gof.rmse);
}

TEST_CASE("zero target gives zero doses") {
  FitProblem pb;
  for (int i = 0; i <= 210; ++i) pb.t.push_back(0.1 * i);
  pb.target.assign(pb.t.size(), 0.0);
  for (auto tmpl : kAllTemplates) {
    pb.tmpl = tmpl;
    const auto r = fit_protocol(pb);
    for (int i = 0; i < dose_count(tmpl); ++i) CHECK(r.theta[i] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(r.cost == doctest::Approx(0.0));
  }
}

TEST_CASE("fit bounds hold") {
  auto pb = problem_from(FitTemplate::Docetaxel1, params({82.53}), 0.1);
  pb.bounds.dose_hi = 50.0;
  const auto r = fit_protocol(pb);
  CHECK(r.theta[0] == doctest::Approx(50.0));
  pb.bounds.dose_hi = -1.0;
  CHECK_THROWS(pb.validate());
}
