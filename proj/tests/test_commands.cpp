#include "pcaopt/commands.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace pcaopt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("pcaopt_test_commands_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  [[nodiscard]] std::string operator/(const std::string& name) const { return (path / name).string(); }
};

RunConfig tiny(const TempDir& d) {
  RunConfig c;
  c.grid.elements = 8;
  c.time.T = 0.5;
  c.time.pregrow = 0.0;
  c.solver.eps_NL = 1e-10;
  c.solver.eps_L = 1e-12;
  c.solver.max_linear_iters = 2000;
  c.output.dir = d.path.string();
  c.output.snapshot_every = 0;
  c.descent.max_iters = 2;
  c.descent.pool_size = 3;
  return c;
}

std::vector<std::string> lines_of(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);)
    if (l.rfind("#", 0) != 0) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("initial controls") {
  RunConfig c;
  c.time.T = 1.0;
  c.controls.initial = "zero";
  auto u = initial_controls(c);
  CHECK(u.size() == 11);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(u.U()[i] + u.S()[i] == 0.0);
  c.controls.initial = "max";
  u = initial_controls(c);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK((u.U()[i] == 0.012 && u.S()[i] == 0.8));
  c.controls.initial = "standard";
  u = initial_controls(c);
  CHECK(u.U()[0] == 0.012);
  CHECK(u.S()[0] == doctest::Approx(0.6));
  CHECK(u.S()[10] == doctest::Approx(0.6 * std::exp(-1.0 / 30.0)));
}

TEST_CASE("objective spec follows the config") {
  RunConfig c;
  c.grid.elements = 4;
  const auto space = SplineSpace::build(4, c.grid.length);
  auto spec = objective_spec(c, space);
  CHECK(spec.area_scale == 1e-8);
  CHECK(spec.p_Omega > 0.0);
  c.objective.p_Omega = 0.5;
  c.objective.variant = "J2";
  spec = objective_spec(c, space);
  CHECK(spec.p_Omega == 0.5);
  CHECK(spec.variant == Variant::J2);
}

TEST_CASE("tumor-free forward run keeps flat quantities") {
  TempDir d;
  auto c = tiny(d);
  c.initial.no_tumor = true;
  cmd_forward(c);
  const auto q = read_csv(d / "qoi.csv");
  const auto v = q.column("v_phi");
  const auto P = q.column("P_s");
  REQUIRE(v.size() == 6);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(std::abs(v[i]) <= 1e-8 * 3000.0 * 3000.0);
    CHECK(P[i] == doctest::Approx(P[0]).epsilon(1e-4));
  }
  CHECK(fs::exists(d / "summary.txt"));
  CHECK(fs::exists(d / "controls.csv"));
  CHECK(fs::exists(d / "snapshots/step_00000.vtk"));
  CHECK(fs::exists(d / "snapshots/step_00005.bin"));
  CHECK(fs::exists(d / "snapshots/step_00005.json"));
  CHECK(fs::exists(d / "snapshots/contour_00005.csv"));
}

TEST_CASE("thread count does not change the forward output") {
  TempDir d;
  auto c = tiny(d);
  c.output.vtk = c.output.binary = false;
  cmd_forward(c);
  const auto a = lines_of(d / "qoi.csv");
  c.solver.assembly = "serial";
  cmd_forward(c);
  CHECK(lines_of(d / "qoi.csv") == a);
}

TEST_CASE("optimize writes its reports") {
  TempDir d;
  auto c = tiny(d);
  c.output.vtk = false;
  cmd_optimize(c);
  const auto it = read_csv(d / "iterations.csv", {"criterion"});
  const auto J = it.column("J");
  REQUIRE(J.size() >= 2);
  for (std::size_t k = 1; k < J.size(); ++k) CHECK(J[k] <= J[k - 1]);
  CHECK_FALSE(it.text.at("criterion").back().empty());
  for (const char* f : {"controls.csv", "controls_initial.csv", "qoi.csv", "qoi_initial.csv", "kkt.txt", "summary.txt"})
    CHECK(fs::exists(d / f));
  const auto u = read_controls(d / "controls.csv", c);
  CHECK(u.size() == 6);

  c.fit.simulate = true;
  cmd_fit_protocol(c);
  const auto report = lines_of(d / "fit_report.csv");
  REQUIRE(report.size() == 5);
  CHECK(report[1].rfind("1-dose docetaxel,", 0) == 0);
  CHECK(report[4].rfind("3-dose new drug,", 0) == 0);
  CHECK(fs::exists(d / "fit_qoi.csv"));
  CHECK(fs::exists(d / "fit_curves.csv"));

  cmd_export_snapshots(c);
  CHECK(fs::exists(d / "snapshots/step_00005.bin"));
}

TEST_CASE("fit-protocol recovers a one-dose target") {
  TempDir d;
  RunConfig c;
  c.output.dir = d.path.string();
  c.controls.U_max = 0.2;
  c.fit.simulate = false;
  fs::create_directories(d.path);
  auto p = docetaxel_standard();
  p.doses = {82.53};
  const auto z = ControlTrajectory::zeros(c.time.T, 210, c.controls.U_max, c.controls.S_max);
  std::vector<double> U;
  for (double t : z.t()) U.push_back(protocol_effect(p, t, c.model.m_ref));
  write_controls_csv(d / "controls.csv", "# target\n", ControlTrajectory(z.t(), U, z.S(), 0.2, 0.8));
  cmd_fit_protocol(c);
  const auto t = read_csv(d / "fit_curves.csv");
  CHECK(t.columns.size() == 6);
  std::ifstream in(d / "fit_report.csv");
  std::string all((std::istreambuf_iterator<char>(in)), {});
  const auto pos = all.find("1-dose docetaxel,");
  REQUIRE(pos != std::string::npos);
  const double d1 = std::stod(all.substr(pos + 17));
  CHECK(d1 == doctest::Approx(82.53).epsilon(1e-3));
}

TEST_CASE("fit-protocol needs a target") {
  TempDir d;
  auto c = tiny(d);
  CHECK_THROWS_AS(cmd_fit_protocol(c), IoError);
  c.fit.target = d / "nope.csv";
  CHECK_THROWS_AS(cmd_fit_protocol(c), IoError);
}

TEST_CASE("controls CSV must match the treatment grid") {
  TempDir d;
  auto c = tiny(d);
  fs::create_directories(d.path);
  write_controls_csv(d / "c.csv", "", ControlTrajectory::zeros(1.0, 10, 0.012, 0.8));
  CHECK_THROWS((void)read_controls(d / "c.csv", c));
}

TEST_CASE("gradient check rows") {
  TempDir d;
  auto c = tiny(d);
  c.gradient_check.elements = 8;
  c.gradient_check.T = 0.5;
  c.gradient_check.eps = {1e-3};
  c.gradient_check.refinements = 1;
  c.objective.area_scale = 1e-6;
  const auto rows = gradient_check(c);
  REQUIRE(rows.size() == 4);
  std::vector<double> smooth;
  for (const auto& r : rows) {
    if (r.direction == "zero") {
      CHECK(r.fd == 0.0);
      CHECK(r.adjoint == 0.0);
      CHECK(r.tangent == 0.0);
    } else {
      smooth.push_back(r.err_adjoint);
      CHECK(r.err_tangent < 1e-5);
    }
  }
  REQUIRE(smooth.size() == 2);
  CHECK(smooth[0] < 1e-3);
  CHECK(smooth[1] < 1e-3);
  cmd_gradient_check(c);
  CHECK(lines_of(d / "gradient_check.csv").size() == 5);
}
