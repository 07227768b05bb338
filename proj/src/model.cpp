#include "pcaopt/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pcaopt {

void ModelParams::validate() const {
  const std::pair<const char*, double> fields[] = {
      {"lambda", lambda},   {"M", M},           {"m_ref", m_ref},     {"K_rho", K_rho},
      {"Kbar_rho", Kbar_rho}, {"K_A", K_A},     {"Kbar_A", Kbar_A},   {"sigma_l", sigma_l},
      {"sigma_r", sigma_r}, {"eta", eta},       {"S_h", S_h},         {"S_c", S_c},
      {"gamma_h", gamma_h}, {"gamma_c", gamma_c}, {"D", D},           {"alpha_h", alpha_h},
      {"alpha_c", alpha_c}, {"gamma_p", gamma_p}};
  for (const auto& [name, v] : fields) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidParameter(std::string("model parameter '") + name + "' must be positive");
    }
  }
}

double eval_m(double sigma, const ModelParams& p) {
  if (!(p.sigma_r > 0.0)) throw InvalidParameter("sigma_r must be positive");
  const double rho = p.rho();
  const double A = p.A();
  return p.m_ref * (0.5 * (rho + A) + (rho - A) / std::numbers::pi *
                                          std::atan((sigma - p.sigma_l) / p.sigma_r));
}

double eval_m_prime(double sigma, const ModelParams& p) {
  if (!(p.sigma_r > 0.0)) throw InvalidParameter("sigma_r must be positive");
  const double x = (sigma - p.sigma_l) / p.sigma_r;
  return p.m_ref * (p.rho() - p.A()) / (std::numbers::pi * p.sigma_r * (1.0 + x * x));
}

ControlTrajectory::ControlTrajectory(std::vector<double> t_grid, std::vector<double> U,
                                     std::vector<double> S, double U_max, double S_max)
    : t_(std::move(t_grid)), U_(std::move(U)), S_(std::move(S)), U_max_(U_max), S_max_(S_max) {
  if (t_.empty()) throw InvalidParameter("control trajectory needs at least one sample");
  if (U_.size() != t_.size() || S_.size() != t_.size()) {
    throw InvalidParameter("control samples must match the time grid length");
  }
  if (!(U_max_ >= 0.0) || !(S_max_ >= 0.0)) throw InvalidParameter("control bounds must be >= 0");
  for (std::size_t i = 1; i < t_.size(); ++i) {
    if (!(t_[i] > t_[i - 1])) throw InvalidParameter("control time grid must be strictly increasing");
  }
  for (std::size_t i = 0; i < t_.size(); ++i) {
    if (!(U_[i] >= 0.0 && U_[i] <= U_max_)) {
      throw InvalidParameter("U sample " + std::to_string(i) + " outside [0, U_max]");
    }
    if (!(S_[i] >= 0.0 && S_[i] <= S_max_)) {
      throw InvalidParameter("S sample " + std::to_string(i) + " outside [0, S_max]");
    }
  }
}

ControlTrajectory ControlTrajectory::zeros(double T, int steps, double U_max, double S_max) {
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) t[static_cast<std::size_t>(i)] = T * i / steps;
  std::vector<double> z(t.size(), 0.0);
  return {t, z, z, U_max, S_max};
}

double interp_linear(const std::vector<double>& t, const std::vector<double>& v, double time) {
  if (time <= t.front()) return v.front();
  if (time >= t.back()) return v.back();
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  const auto hi = static_cast<std::size_t>(it - t.begin());
  const std::size_t lo = hi - 1;
  const double w = (time - t[lo]) / (t[hi] - t[lo]);
  return v[lo] + w * (v[hi] - v[lo]);
}

double ControlTrajectory::interp(const std::vector<double>& v, double time) const {
  return interp_linear(t_, v, time);
}

double ControlTrajectory::U_at(double time) const { return interp(U_, time); }
double ControlTrajectory::S_at(double time) const { return interp(S_, time); }

void DrugProtocol::validate() const {
  if (doses.size() != delivery_times.size()) {
    throw InvalidParameter("protocol needs one delivery time per dose");
  }
  if (!(tau > 0.0)) throw InvalidParameter("protocol decay time tau must be positive");
  for (std::size_t i = 0; i < doses.size(); ++i) {
    if (!(doses[i] >= 0.0)) throw InvalidParameter("protocol doses must be non-negative");
    if (i > 0 && delivery_times[i] < delivery_times[i - 1]) {
      throw InvalidParameter("protocol delivery times must be non-decreasing");
    }
  }
  if (!delivery_times.empty() && delivery_times.front() < 0.0) {
    throw InvalidParameter("protocol delivery times must be >= 0");
  }
}

double protocol_effect(const DrugProtocol& protocol, double t, double m_ref) {
  const double c = protocol.m_ref_factor ? m_ref : 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < protocol.doses.size(); ++i) {
    const double lag = t - protocol.delivery_times[i];
    if (lag >= 0.0) sum += c * protocol.beta * protocol.doses[i] * std::exp(-lag / protocol.tau);
  }
  return sum;
}

DrugProtocol docetaxel_standard() {
  return {DrugKind::Cytotoxic, {75.0}, {0.0}, 5.0, 1.59e-2, true};
}

DrugProtocol bevacizumab_standard() {
  return {DrugKind::Antiangiogenic, {15.0}, {0.0}, 30.0, 0.04, false};
}

}  // namespace pcaopt
