// Tracking-type objective J and its variants.
#pragma once

#include "pcaopt/forward.hpp"

#include <array>
#include <string>
#include <vector>

namespace pcaopt {

enum class Variant { J, J1, J2, J3 };

[[nodiscard]] std::string to_string(Variant v);
/// Throws InvalidParameter for unknown names.
[[nodiscard]] Variant variant_from_string(const std::string& s);

struct ObjectiveSpec {
  std::array<double, 7> k{2.0, 2.0, 0.0, 2.0, 0.0, 1.0, 1.0};  // k1..k7
  Variant variant = Variant::J1;
  double phi_Q = 0.0;
  double phi_Omega = 0.0;
  double p_Omega = 0.0;               // used when p_Omega_series is empty
  std::vector<double> p_Omega_series;  // optional, one value per time sample
  /// Multiplies every spatial integral (domain area units to reporting units).
  double area_scale = 1.0;

  /// Weights with the variant's absent constants set to zero.
  [[nodiscard]] std::array<double, 7> effective_k() const;
  [[nodiscard]] double p_Omega_at(std::size_t i) const;
  /// Non-negative weights, at least one positive after the variant mask.
  void validate() const;
};

/// phi_Q = phi_Omega = 0 and p_Omega = alpha_h |Omega| s / gamma_p.
void apply_default_targets(ObjectiveSpec& spec, const ModelParams& params, const SplineSpace& space);

struct ObjectiveBreakdown {
  std::array<double, 7> terms{};  // contribution of each k-term
  double total = 0.0;
};

/// Trapezoid rule on a sample grid.
[[nodiscard]] double trapezoid(const std::vector<double>& t, const std::vector<double>& f);

/// Per-step quantities needed by J, collected while the forward march runs.
class ObjectiveAccumulator {
 public:
  ObjectiveAccumulator(const SplineSpace& space, const ObjectiveSpec& spec);
  void observe(int n, double t, const Vec& Y);
  [[nodiscard]] ObjectiveBreakdown finish(const ControlTrajectory& controls) const;
  [[nodiscard]] StepObserver observer();

 private:
  const SplineSpace* space_;
  const ObjectiveSpec* spec_;
  std::vector<double> t_;
  std::vector<double> track_;  // ∫ (phi - phi_Q)^2
  std::vector<double> psa_;    // ∫ p
  double final_sq_ = 0.0;      // ∫ (phi(T) - phi_Omega)^2
  double final_phi_ = 0.0;     // ∫ phi(T)
  double final_p_ = 0.0;       // ∫ p(T)
};

/// J of a stored trajectory; time grids must agree.
[[nodiscard]] ObjectiveBreakdown evaluate_objective(const SplineSpace& space, const ObjectiveSpec& spec,
                                                    const StateTrajectory& traj,
                                                    const ControlTrajectory& controls);

}  // namespace pcaopt
