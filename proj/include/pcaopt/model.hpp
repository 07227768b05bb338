// Model parameters, scalar closures and drug-effect curves for the
// prostate tumor / nutrient / PSA phase-field system.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pcaopt {

/// Raised for parameter values that violate their documented domain.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Biological and closure constants. Units are documentation only:
/// lengths in micrometres, time in days, nutrient in g/L, PSA in ng/mL/cc.
struct ModelParams {
  // tumor dynamics
  double lambda = 640.0;      // um^2/day
  double M = 2.5;             // 1/day
  double m_ref = 7.55e-2;     // 1/day
  double K_rho = 1.50e-2;     // 1/day
  double Kbar_rho = 1.50e-2;  // 1/day
  double K_A = 1.37e-2;       // 1/day
  double Kbar_A = 2.10e-2;    // 1/day
  double sigma_l = 0.4;       // g/L, reference nutrient level
  double sigma_r = 0.5;       // g/L, nutrient threshold width
  // nutrient
  double eta = 6.4e4;         // um^2/day
  double S_h = 2.0;           // g/L/day
  double S_c = 2.75;          // g/L/day
  double gamma_h = 2.0;
  double gamma_c = 17.0;
  // tissue PSA
  double D = 640.0;           // um^2/day
  double alpha_h = 1.712e-2;  // ng/mL/cc/day
  double alpha_c = 15.0 * 1.712e-2;
  double gamma_p = 0.274;     // 1/day

  [[nodiscard]] double gamma_ch() const { return gamma_c - gamma_h; }
  [[nodiscard]] double alpha_ch() const { return alpha_c - alpha_h; }
  [[nodiscard]] double S_ch() const { return S_c - S_h; }
  [[nodiscard]] double rho() const { return K_rho / Kbar_rho; }
  [[nodiscard]] double A() const { return -K_A / Kbar_A; }

  /// Throws InvalidParameter unless every base constant is strictly positive.
  void validate() const;
};

struct Derivs {
  double value;
  double d1;
  double d2;
};

/// Double-well potential F(phi) = M phi^2 (1 - phi)^2 and its derivatives.
[[nodiscard]] constexpr Derivs eval_F_derivs(double phi, double M) {
  const double q = 1.0 - phi;
  return {M * phi * phi * q * q, M * (4.0 * phi * phi * phi - 6.0 * phi * phi + 2.0 * phi),
          M * (12.0 * phi * phi - 12.0 * phi + 2.0)};
}

/// Interpolation function h(phi) = M phi^2 (3 - 2 phi) and its derivatives.
[[nodiscard]] constexpr Derivs eval_h_derivs(double phi, double M) {
  return {M * phi * phi * (3.0 - 2.0 * phi), 6.0 * M * phi * (1.0 - phi), M * (6.0 - 12.0 * phi)};
}

/// Net proliferation rate m(sigma); bounded and strictly increasing.
[[nodiscard]] double eval_m(double sigma, const ModelParams& p);
[[nodiscard]] double eval_m_prime(double sigma, const ModelParams& p);

/// Time-sampled controls U(t) (cytotoxic, 1/day) and S(t) (antiangiogenic,
/// g/L/day) with their box bounds. Construction enforces the admissible box.
class ControlTrajectory {
 public:
  ControlTrajectory(std::vector<double> t_grid, std::vector<double> U, std::vector<double> S,
                    double U_max, double S_max);

  /// Zero controls on a uniform grid of `steps`+1 samples.
  static ControlTrajectory zeros(double T, int steps, double U_max, double S_max);

  [[nodiscard]] const std::vector<double>& t() const { return t_; }
  [[nodiscard]] const std::vector<double>& U() const { return U_; }
  [[nodiscard]] const std::vector<double>& S() const { return S_; }
  [[nodiscard]] double U_max() const { return U_max_; }
  [[nodiscard]] double S_max() const { return S_max_; }
  [[nodiscard]] std::size_t size() const { return t_.size(); }

  /// Piecewise-linear interpolation of the samples (clamped outside the grid).
  [[nodiscard]] double U_at(double time) const;
  [[nodiscard]] double S_at(double time) const;

 private:
  [[nodiscard]] double interp(const std::vector<double>& v, double time) const;

  std::vector<double> t_;
  std::vector<double> U_;
  std::vector<double> S_;
  double U_max_;
  double S_max_;
};

/// Piecewise-linear interpolation of samples v on an increasing grid t,
/// clamped to the end values outside the grid.
[[nodiscard]] double interp_linear(const std::vector<double>& t, const std::vector<double>& v, double time);

enum class DrugKind { Cytotoxic, Antiangiogenic };

/// Superposition of exponentially decaying single-dose effects.
struct DrugProtocol {
  DrugKind kind = DrugKind::Cytotoxic;
  std::vector<double> doses;
  std::vector<double> delivery_times;
  double tau = 5.0;
  double beta = 1.59e-2;
  bool m_ref_factor = true;

  void validate() const;
};

/// Effect of `protocol` at time t >= 0. A dose delivered at t_i is active
/// from t_i on (H(0) = 1).
[[nodiscard]] double protocol_effect(const DrugProtocol& protocol, double t, double m_ref);

/// Docetaxel reference protocol (single 75 mg/m^2 dose, tau = 5 days).
[[nodiscard]] DrugProtocol docetaxel_standard();
/// Bevacizumab reference protocol (single 15 mg/kg dose, tau = 30 days).
[[nodiscard]] DrugProtocol bevacizumab_standard();

struct QuantitiesOfInterest {
  double P_s;    // serum PSA
  double v_phi;  // tumor volume
};

/// Serum PSA and tumor volume from already-computed spatial integrals.
[[nodiscard]] inline QuantitiesOfInterest quantities_of_interest(double p_integral,
                                                                 double phi_integral,
                                                                 double scale = 1.0) {
  return {p_integral * scale, phi_integral * scale};
}

}  // namespace pcaopt
