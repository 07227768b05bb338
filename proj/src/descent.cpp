#include "pcaopt/descent.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>

namespace pcaopt {

void DescentSettings::validate() const {
  if (pool_size < 1) throw InvalidParameter("descent pool size must be at least 1");
  if (!(eps_sd1 > 0.0) || !(eps_sd2 > 0.0)) throw InvalidParameter("descent tolerances must be positive");
  if (max_iters < 0) throw InvalidParameter("descent iteration limit must be non-negative");
  if (safeguard_halvings < 0) throw InvalidParameter("safeguard halvings must be non-negative");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::None: return "";
    case StopReason::Criterion1: return "criterion1";
    case StopReason::Criterion2: return "criterion2";
    case StopReason::Stagnation: return "stagnation";
    case StopReason::MaxIterations: return "max_iters";
  }
  return "";
}

namespace {

bool small(double num, double den, double eps) { return num == 0.0 || num < eps * den; }

std::vector<double> diff(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

}  // namespace

bool criterion1(const Gradient& g0, const Gradient& gk, double eps) {
  return small(l2_norm_sq(gk.t, gk.dU), l2_norm_sq(g0.t, g0.dU), eps) &&
         small(l2_norm_sq(gk.t, gk.dS), l2_norm_sq(g0.t, g0.dS), eps);
}

bool criterion2(const Gradient& gprev, const Gradient& gk, double eps) {
  return small(l2_norm_sq(gk.t, diff(gk.dU, gprev.dU)), l2_norm_sq(gprev.t, gprev.dU), eps) &&
         small(l2_norm_sq(gk.t, diff(gk.dS, gprev.dS)), l2_norm_sq(gprev.t, gprev.dS), eps);
}

std::size_t pool_argmin(const std::vector<double>& J) {
  if (J.empty()) throw InvalidParameter("empty pool");
  std::size_t best = 0;
  for (std::size_t j = 1; j < J.size(); ++j) {
    if (J[j] < J[best]) best = j;
  }
  return best;
}

ControlTrajectory projected_step(const ControlTrajectory& c, const Gradient& g, double mu) {
  if (g.dU.size() != c.size()) throw InvalidParameter("step: gradient and control grids differ");
  std::vector<double> U(c.size()), S(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    U[i] = project_box(c.U()[i] - mu * g.dU[i], 0.0, c.U_max());
    S[i] = project_box(c.S()[i] - mu * g.dS[i], 0.0, c.S_max());
  }
  return ControlTrajectory(c.t(), std::move(U), std::move(S), c.U_max(), c.S_max());
}

ObjectiveBreakdown evaluate_controls(const ControlProblem& pb, const ControlTrajectory& c) {
  ForwardOptions o = pb.forward;
  o.store = false;
  o.track_bounds = false;
  ObjectiveAccumulator acc(*pb.space, pb.objective);
  (void)solve_forward(*pb.space, pb.start, pb.params, c, pb.T, o, acc.observer());
  return acc.finish(c);
}

namespace {

struct Evaluated {
  StateTrajectory forward;
  ObjectiveBreakdown J;
};

Evaluated evaluate_stored(const ControlProblem& pb, const ControlTrajectory& c) {
  ForwardOptions o = pb.forward;
  o.store = true;
  Evaluated e;
  e.forward = solve_forward(*pb.space, pb.start, pb.params, c, pb.T, o);
  e.J = evaluate_objective(*pb.space, pb.objective, e.forward, c);
  return e;
}

}  // namespace

DescentResult steepest_descent(const ControlProblem& pb, const ControlTrajectory& initial,
                               const DescentSettings& settings, const IterationCallback& on_iter) {
  settings.validate();
  pb.objective.validate();
  DescentResult r{initial, {}, {}, {}, {}, StopReason::None, 0};

  Evaluated cur = evaluate_stored(pb, initial);
  r.controls = initial;
  r.adjoint = solve_adjoint(*pb.space, pb.params, pb.objective, cur.forward, r.controls, pb.forward);
  r.gradient = reduced_gradient(*pb.space, pb.params, pb.objective, cur.forward, r.adjoint, r.controls);
  const Gradient g0 = r.gradient;
  Gradient gprev;

  for (int k = 0;; ++k) {
    IterationLog row;
    row.iter = k;
    row.J = cur.J;
    row.norm_dU = std::sqrt(l2_norm_sq(r.gradient.t, r.gradient.dU));
    row.norm_dS = std::sqrt(l2_norm_sq(r.gradient.t, r.gradient.dS));

    if (criterion1(g0, r.gradient, settings.eps_sd1)) {
      row.criterion = StopReason::Criterion1;
    } else if (k > 0 && criterion2(gprev, r.gradient, settings.eps_sd2)) {
      row.criterion = StopReason::Criterion2;
    } else if (k >= settings.max_iters) {
      row.criterion = StopReason::MaxIterations;
    }

    if (row.criterion == StopReason::None) {
      const int N = settings.pool_size;
      double scale = 1.0;
      bool accepted = false;
      for (int attempt = 0; attempt <= settings.safeguard_halvings && !accepted; ++attempt, scale *= 0.5) {
        std::vector<ControlTrajectory> cand;
        cand.reserve(static_cast<std::size_t>(N));
        for (int j = 1; j <= N; ++j) cand.push_back(projected_step(r.controls, r.gradient, scale * j / N));
        std::vector<double> Jv(static_cast<std::size_t>(N), std::numeric_limits<double>::infinity());
        Evaluated best;
        std::size_t jstar = 0;
        if (settings.parallel_pool) {
          std::vector<std::exception_ptr> errs(static_cast<std::size_t>(N));
#pragma omp parallel for schedule(dynamic, 1)
          for (int j = 0; j < N; ++j) {
            const auto u = static_cast<std::size_t>(j);
            try {
              Jv[u] = evaluate_controls(pb, cand[u]).total;
            } catch (...) {
              errs[u] = std::current_exception();
            }
          }
          for (auto& e : errs) {
            if (e) std::rethrow_exception(e);
          }
          jstar = pool_argmin(Jv);
          best = evaluate_stored(pb, cand[jstar]);
        } else {
          for (int j = 0; j < N; ++j) {
            const auto u = static_cast<std::size_t>(j);
            Evaluated e = evaluate_stored(pb, cand[u]);
            Jv[u] = e.J.total;
            if (u == 0 || Jv[u] < Jv[jstar]) {
              jstar = u;
              best = std::move(e);
            }
          }
        }
        if (best.J.total <= cur.J.total) {
          accepted = true;
          row.mu_star = scale * static_cast<double>(jstar + 1) / N;
          r.controls = cand[jstar];
          cur = std::move(best);
        }
      }
      if (!accepted) row.criterion = StopReason::Stagnation;
    }

    r.log.push_back(row);
    if (on_iter) on_iter(row);
    if (row.criterion != StopReason::None) {
      r.reason = row.criterion;
      break;
    }
    ++r.iterations;
    gprev = std::move(r.gradient);
    r.adjoint = solve_adjoint(*pb.space, pb.params, pb.objective, cur.forward, r.controls, pb.forward);
    r.gradient = reduced_gradient(*pb.space, pb.params, pb.objective, cur.forward, r.adjoint, r.controls);
  }
  r.forward = std::move(cur.forward);
  return r;
}

}  // namespace pcaopt
