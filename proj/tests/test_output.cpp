#include "pcaopt/output.hpp"

#include "doctest.h"

#include "json.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <unistd.h>

using namespace pcaopt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("pcaopt_test_output_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  [[nodiscard]] std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, 0.012}) {
    CHECK(std::strtod(format_number(v).c_str(), nullptr) == v);
  }
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("config header lines") {
  const auto h = config_header(RunConfig{}, "forward run");
  CHECK(h.rfind("# forward run\n", 0) == 0);
  std::istringstream in(h);
  std::string line;
  while (std::getline(in, line)) CHECK(line.rfind("#", 0) == 0);
}

TEST_CASE("CSV write and read") {
  TempDir d;
  const auto p = d / "t.csv";
  write_csv(p, config_header(RunConfig{}, "table"), {"a", "b"}, {{1.0, 0.1}, {2.0, 1.0 / 3.0}});
  const auto t = read_csv(p);
  CHECK(t.columns == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.column("b")[1] == 1.0 / 3.0);
  CHECK_THROWS((void)t.column("c"));
  CHECK_THROWS_AS((void)read_csv(d / "missing.csv"), IoError);
  {
    std::ofstream out(d / "bad.csv");
    out << "# x\na,b\n1,2\n3\n";
  }
  CHECK_THROWS_AS((void)read_csv(d / "bad.csv"), ConfigError);
  {
    std::ofstream out(d / "bad2.csv");
    out << "a,b\n1,zz\n";
  }
  CHECK_THROWS_AS((void)read_csv(d / "bad2.csv"), ConfigError);
  const auto labelled = read_csv(d / "bad2.csv", {"b"});
  CHECK(labelled.text.at("b") == std::vector<std::string>{"zz"});
  CHECK(std::isnan(labelled.rows[0][1]));
  {
    std::ofstream out(d / "empty_last.csv");
    out << "a,b\n1,\n";
  }
  CHECK(read_csv(d / "empty_last.csv", {"b"}).text.at("b")[0].empty());
}

TEST_CASE("controls CSV round trip") {
  TempDir d;
  const auto z = ControlTrajectory::zeros(0.3, 3, 0.012, 0.8);
  const ControlTrajectory c(z.t(), {0.0, 0.001, 0.012, 0.005}, {0.8, 0.1, 0.0, 0.3}, 0.012, 0.8);
  write_controls_csv(d / "c.csv", "# c\n", c);
  const auto t = read_csv(d / "c.csv");
  CHECK(t.columns == std::vector<std::string>{"t", "U", "S"});
  CHECK(t.column("U") == c.U());
  CHECK(t.column("S") == c.S());
  CHECK(t.column("t") == c.t());
}

TEST_CASE("lattice sampling reproduces a constant") {
  const auto space = SplineSpace::build(4, 3000.0);
  const Vec one = Vec::Ones(space.num_basis());
  const auto v = sample_lattice(space, one, 5);
  REQUIRE(v.size() == 25);
  for (double x : v) CHECK(x == doctest::Approx(1.0));
}

TEST_CASE("isoline of a circle") {
  const int n = 101;
  const double L = 2.0, r = 0.6;
  std::vector<double> v(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = L * i / (n - 1) - 1.0, y = L * j / (n - 1) - 1.0;
      v[static_cast<std::size_t>(j * n + i)] = std::hypot(x, y);
    }
  const auto segs = isoline(v, n, L, r);
  REQUIRE(!segs.empty());
  double length = 0.0;
  for (const auto& s : segs) {
    for (int k : {0, 2}) CHECK(std::hypot(s[k] - 1.0, s[k + 1] - 1.0) == doctest::Approx(r).epsilon(1e-3));
    length += std::hypot(s[2] - s[0], s[3] - s[1]);
  }
  CHECK(length == doctest::Approx(2.0 * M_PI * r).epsilon(1e-3));
  CHECK(isoline(v, n, L, 5.0).empty());
}

TEST_CASE("binary snapshot and JSON header") {
  TempDir d;
  Snapshot s;
  s.t = 1.5;
  s.n = 3;
  s.L = 3000.0;
  for (int i = 0; i < 9; ++i) {
    s.phi.push_back(i);
    s.sigma.push_back(0.5 * i);
    s.p.push_back(-i);
  }
  write_binary(d / "snap", RunConfig{}, s);
  const auto j = nlohmann::json::parse(slurp(d / "snap.json"));
  CHECK(j["nx"] == 3);
  CHECK(j["ny"] == 3);
  CHECK(j["t"] == 1.5);
  CHECK(j["fields"] == nlohmann::json::array({"phi", "sigma", "p"}));
  const auto raw = slurp(d / "snap.bin");
  REQUIRE(raw.size() == 27 * sizeof(double));
  std::vector<double> back(27);
  std::memcpy(back.data(), raw.data(), raw.size());
  CHECK(back[4] == 4.0);
  CHECK(back[9 + 4] == 2.0);
  CHECK(back[18 + 8] == -8.0);
}

TEST_CASE("VTK snapshot") {
  TempDir d;
  Snapshot s;
  s.n = 2;
  s.L = 1.0;
  s.phi = {0, 1, 2, 3};
  s.sigma = {1, 1, 1, 1};
  s.p = {0, 0, 0, 0};
  write_vtk(d / "s.vtk", "# hello\n", s);
  const auto text = slurp(d / "s.vtk");
  CHECK(text.rfind("# vtk DataFile Version", 0) == 0);
  CHECK(text.find("DIMENSIONS 2 2 1") != std::string::npos);
  CHECK(text.find("POINT_DATA 4") != std::string::npos);
  for (const char* f : {"SCALARS phi", "SCALARS sigma", "SCALARS p"}) CHECK(text.find(f) != std::string::npos);
  CHECK(text.find("config 1 8 unsigned_char") != std::string::npos);
}

TEST_CASE("directories") {
  TempDir d;
  CHECK_NOTHROW(ensure_directory(d / "a/b/c"));
  CHECK(fs::is_directory(d / "a/b/c"));
  {
    std::ofstream out(d / "file");
    out << "x";
  }
  CHECK_THROWS_AS(ensure_directory(d / "file/sub"), IoError);
}
