#include "pcaopt/objective.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcaopt {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::J: return "J";
    case Variant::J1: return "J1";
    case Variant::J2: return "J2";
    case Variant::J3: return "J3";
  }
  return "J";
}

Variant variant_from_string(const std::string& s) {
  if (s == "J") return Variant::J;
  if (s == "J1") return Variant::J1;
  if (s == "J2") return Variant::J2;
  if (s == "J3") return Variant::J3;
  throw InvalidParameter("unknown objective variant '" + s + "' (expected J, J1, J2 or J3)");
}

std::array<double, 7> ObjectiveSpec::effective_k() const {
  auto e = k;
  switch (variant) {
    case Variant::J: break;
    case Variant::J1: e[2] = e[4] = 0.0; break;
    case Variant::J2: e[0] = e[2] = e[4] = 0.0; break;
    case Variant::J3: e[0] = e[1] = e[4] = 0.0; break;
  }
  return e;
}

double ObjectiveSpec::p_Omega_at(std::size_t i) const {
  if (p_Omega_series.empty()) return p_Omega;
  return p_Omega_series.at(i);
}

void ObjectiveSpec::validate() const {
  for (int i = 0; i < 7; ++i) {
    if (!(k[static_cast<std::size_t>(i)] >= 0.0)) {
      throw InvalidParameter("objective weight k" + std::to_string(i + 1) + " must be non-negative");
    }
  }
  bool any = false;
  for (double v : effective_k()) any = any || v > 0.0;
  if (!any) throw InvalidParameter("objective needs at least one positive weight");
  if (!(area_scale > 0.0)) throw InvalidParameter("objective area scale must be positive");
}

void apply_default_targets(ObjectiveSpec& spec, const ModelParams& params, const SplineSpace& space) {
  spec.phi_Q = 0.0;
  spec.phi_Omega = 0.0;
  const double area = integrate_field(space, Vec::Ones(space.num_basis()));
  spec.p_Omega = params.alpha_h * area * spec.area_scale / params.gamma_p;
  spec.p_Omega_series.clear();
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
  if (t.size() != f.size()) throw InvalidParameter("trapezoid: grid and values differ in length");
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

ObjectiveAccumulator::ObjectiveAccumulator(const SplineSpace& space, const ObjectiveSpec& spec)
    : space_(&space), spec_(&spec) {}

void ObjectiveAccumulator::observe(int n, double t, const Vec& Y) {
  const int nb = space_->num_basis();
  if (n != static_cast<int>(t_.size())) throw std::logic_error("objective accumulator: steps out of order");
  const Vec phi = Y.segment(0, nb);
  const Vec dq = (phi.array() - spec_->phi_Q).matrix();
  t_.push_back(t);
  track_.push_back(integrate_product(*space_, dq, dq));
  psa_.push_back(integrate_field(*space_, Y.segment(2 * nb, nb)));
  const Vec dO = (phi.array() - spec_->phi_Omega).matrix();
  final_sq_ = integrate_product(*space_, dO, dO);
  final_phi_ = integrate_field(*space_, phi);
  final_p_ = psa_.back();
}

StepObserver ObjectiveAccumulator::observer() {
  return [this](int n, double t, const Vec& Y) { observe(n, t, Y); };
}

ObjectiveBreakdown ObjectiveAccumulator::finish(const ControlTrajectory& controls) const {
  if (controls.size() != t_.size()) throw InvalidParameter("objective: control and state grids differ in length");
  for (std::size_t i = 0; i < t_.size(); ++i) {
    if (std::abs(controls.t()[i] - t_[i]) > 1e-9) throw InvalidParameter("objective: control and state grids differ");
  }
  const auto k = spec_->effective_k();
  const double s = spec_->area_scale;
  std::vector<double> excess(t_.size()), u2(t_.size()), s2(t_.size());
  for (std::size_t i = 0; i < t_.size(); ++i) {
    const double e = std::max(0.0, s * psa_[i] - spec_->p_Omega_at(i));
    excess[i] = e * e;
    u2[i] = controls.U()[i] * controls.U()[i];
    s2[i] = controls.S()[i] * controls.S()[i];
  }
  ObjectiveBreakdown b;
  b.terms[0] = 0.5 * k[0] * s * trapezoid(t_, track_);
  b.terms[1] = 0.5 * k[1] * s * final_sq_;
  b.terms[2] = k[2] * s * final_phi_;
  b.terms[3] = 0.5 * k[3] * trapezoid(t_, excess);
  b.terms[4] = k[4] * s * final_p_;
  b.terms[5] = 0.5 * k[5] * trapezoid(t_, u2);
  b.terms[6] = 0.5 * k[6] * trapezoid(t_, s2);
  for (double v : b.terms) b.total += v;
  return b;
}

ObjectiveBreakdown evaluate_objective(const SplineSpace& space, const ObjectiveSpec& spec,
                                      const StateTrajectory& traj, const ControlTrajectory& controls) {
  if (traj.Y.size() != traj.t.size()) throw InvalidParameter("objective: trajectory was not stored");
  ObjectiveAccumulator acc(space, spec);
  for (std::size_t i = 0; i < traj.t.size(); ++i) acc.observe(static_cast<int>(i), traj.t[i], traj.Y[i]);
  return acc.finish(controls);
}

}  // namespace pcaopt
