// Fitting dose/time/decay parameters of a drug protocol to a target effect curve.
#pragma once

#include "pcaopt/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace pcaopt {

enum class FitTemplate { Docetaxel1, Docetaxel3, NewDrug1, NewDrug3 };

inline constexpr std::array<FitTemplate, 4> kAllTemplates{FitTemplate::Docetaxel1, FitTemplate::Docetaxel3,
                                                          FitTemplate::NewDrug1, FitTemplate::NewDrug3};

[[nodiscard]] std::string to_string(FitTemplate t);
[[nodiscard]] int dose_count(FitTemplate t);
[[nodiscard]] bool free_tau(FitTemplate t);

struct FitBounds {
  double dose_lo = 0.0, dose_hi = 100.0;
  double time_lo = 0.0, time_hi = 21.0;
  double tau_lo = 1.0, tau_hi = 20.0;
};

/// Natural parameters of a template: doses, then t2, t3 if three doses, then tau if free.
using ParamVec = Eigen::VectorXd;

struct FitProblem {
  std::vector<double> t;
  std::vector<double> target;
  FitTemplate tmpl = FitTemplate::Docetaxel1;
  double m_ref = 7.55e-2;
  double beta = 1.59e-2;
  double tau_fixed = 5.0;  // docetaxel decay when tau is not free
  FitBounds bounds;
  double tolerance = 1e-8;  // first-order optimality, relative to the starting point
  int max_iters = 200;
  void validate() const;
};

/// Start values: 75 for one dose; 25, 25, 25 at days 0, 7, 14 for three; tau = 5.
[[nodiscard]] ParamVec default_start(FitTemplate t);

[[nodiscard]] DrugProtocol to_protocol(const FitProblem& pb, const ParamVec& theta);
[[nodiscard]] ParamVec from_protocol(FitTemplate t, const DrugProtocol& p);

/// Effect curve of the template on the problem grid.
[[nodiscard]] Eigen::VectorXd model_curve(const FitProblem& pb, const ParamVec& theta);
/// d(curve)/d(theta) in natural parameters.
[[nodiscard]] Eigen::MatrixXd model_jacobian(const FitProblem& pb, const ParamVec& theta);

struct GoodnessOfFit {
  double r2 = 0.0;
  bool r2_defined = true;  // false for a constant reference series
  double rmse = 0.0;
};

/// R^2 and RMSE of `model` against the reference series `ref`.
[[nodiscard]] GoodnessOfFit goodness_of_fit(const std::vector<double>& ref, const std::vector<double>& model);

struct FitResult {
  FitTemplate tmpl = FitTemplate::Docetaxel1;
  ParamVec theta;
  DrugProtocol protocol;
  GoodnessOfFit gof;
  double cost = 0.0;  // 0.5 * sum of squared residuals
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;  // accepted steps
};

/// Bounded Levenberg-Marquardt from `start`. An empty start uses the
/// default start projected onto the bounds.
[[nodiscard]] FitResult fit_protocol(const FitProblem& pb, const ParamVec& start = {});

/// Fits every template. Three-dose fits are also started from the matching
/// one-dose optimum padded with zero doses, and new-drug fits from the
/// docetaxel optimum; the lower cost wins.
[[nodiscard]] std::vector<FitResult> fit_all_templates(const FitProblem& base);

}  // namespace pcaopt
