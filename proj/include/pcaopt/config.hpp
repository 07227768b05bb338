// Run configuration: YAML parsing and serialization.
#pragma once

#include "pcaopt/descent.hpp"
#include "pcaopt/protocol_fit.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcaopt {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridConfig {
  int elements = 64;
  double length = 3000.0;  // um
};

struct TimeConfig {
  double dt = 0.1;
  double T = 21.0;
  double pregrow = 60.0;
};

struct ObjectiveConfig {
  std::string variant = "J1";
  std::vector<double> k{2.0, 2.0, 0.0, 2.0, 0.0, 1.0, 1.0};
  double phi_Q = 0.0;
  double phi_Omega = 0.0;
  std::optional<double> p_Omega;  // healthy level alpha_h |Omega| s / gamma_p when unset
  double area_scale = 1e-8;
};

struct ProtocolConfig {
  std::vector<double> doses;
  std::vector<double> times;
  double tau = 5.0;
  double beta = 1.59e-2;
};

struct ControlConfig {
  double U_max = 0.012;
  double S_max = 0.8;
  std::string initial = "standard";  // standard | zero | max
  ProtocolConfig docetaxel{{75.0}, {0.0}, 5.0, 1.59e-2};
  ProtocolConfig bevacizumab{{15.0}, {0.0}, 30.0, 0.04};
};

struct SolverConfig {
  double rho_inf = 0.5;
  double eps_NL = 1e-3;
  double eps_L = 1e-3;
  int max_linear_iters = 500;
  int max_newton_iters = 25;
  std::string assembly = "colored";  // colored | serial
};

struct FitConfig {
  std::string target;  // t,U,S CSV; empty uses the optimizer output in the run directory
  double dose_lo = 0.0, dose_hi = 100.0;
  double time_lo = 0.0, time_hi = 21.0;
  double tau_lo = 1.0, tau_hi = 20.0;
  double tolerance = 1e-8;
  int max_iters = 200;
  bool simulate = true;  // forward runs of the fitted protocols
};

struct GradientCheckConfig {
  int elements = 16;
  double T = 2.0;
  double dt = 0.1;
  double pregrow = 0.0;
  std::vector<double> eps{1e-2, 1e-3, 1e-4};
  int refinements = 1;  // halvings of dt and h after the base level
  double eps_NL = 1e-10;
  double eps_L = 1e-12;
};

struct OutputConfig {
  std::string dir = "out";
  int snapshot_every = 10;  // steps; 0 disables
  int lattice = 0;          // points per side of the export lattice; 0 means 2 n_el + 1
  bool vtk = true;
  bool binary = true;
  double volume_scale = 1.0;  // multiplies v_phi in reports
  double psa_scale = 1.0;     // multiplies P_s in reports
};

struct RunConfig {
  GridConfig grid;
  TimeConfig time;
  ModelParams model;
  InitialConditionSpec initial;
  ObjectiveConfig objective;
  ControlConfig controls;
  SolverConfig solver;
  DescentSettings descent;
  FitConfig fit;
  GradientCheckConfig gradient_check;
  OutputConfig output;
  int threads = 0;  // 0 keeps the OpenMP default
  unsigned seed = 1;

  /// Range and consistency checks; throws ConfigError.
  void validate() const;
};

/// Parses YAML text. Unknown keys and malformed values raise ConfigError
/// with the line number; `source` names the input in messages.
[[nodiscard]] RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
/// Reads and parses a file; IoError if unreadable.
[[nodiscard]] RunConfig load_config(const std::string& path);
/// Complete YAML form; parse_config(serialize_config(c)) reproduces c.
[[nodiscard]] std::string serialize_config(const RunConfig& c);

[[nodiscard]] bool operator==(const RunConfig& a, const RunConfig& b);

}  // namespace pcaopt
