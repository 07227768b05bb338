#include "pcaopt/gmres.hpp"

#include <cmath>

namespace pcaopt {

std::string to_string(GmresStatus s) {
  switch (s) {
    case GmresStatus::Converged: return "converged";
    case GmresStatus::HappyBreakdown: return "happy-breakdown";
    case GmresStatus::MaxIterations: return "max-iterations";
    case GmresStatus::Breakdown: return "breakdown";
  }
  return "unknown";
}

GmresResult gmres_solve(const MatVec& apply, const Vec& rhs, const Vec& diag, double tol,
                        int max_iters) {
  const Eigen::Index n = rhs.size();
  GmresResult out;
  out.x = Vec::Zero(n);

  Vec inv_diag(n);
  for (Eigen::Index i = 0; i < n; ++i) inv_diag[i] = diag[i] != 0.0 ? 1.0 / diag[i] : 1.0;

  Vec r = rhs.cwiseProduct(inv_diag);
  const double beta = r.norm();
  if (!std::isfinite(beta)) {
    out.status = GmresStatus::Breakdown;
    return out;
  }
  if (beta == 0.0) {
    out.residual_history.push_back(0.0);
    return out;
  }

  const int m = std::max(1, max_iters);
  std::vector<Vec> V;
  V.reserve(static_cast<std::size_t>(m) + 1);
  V.emplace_back(r / beta);
  // Hessenberg columns, column k holds rows 0..k+1
  std::vector<std::vector<double>> Hc;
  auto H = [&Hc](int i, int j) -> double& { return Hc[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]; };
  std::vector<double> cs, sn, g{beta};
  out.residual_history.push_back(1.0);

  Vec w(n);
  int k = 0;
  bool done = false;
  for (; k < m && !done; ++k) {
    Hc.emplace_back(static_cast<std::size_t>(k) + 2, 0.0);
    cs.push_back(0.0);
    sn.push_back(0.0);
    g.push_back(0.0);
    apply(V[static_cast<std::size_t>(k)], w);
    w.array() *= inv_diag.array();
    for (int j = 0; j <= k; ++j) {
      const double hij = V[static_cast<std::size_t>(j)].dot(w);
      H(j, k) = hij;
      w.noalias() -= hij * V[static_cast<std::size_t>(j)];
    }
    const double hnext = w.norm();
    H(k + 1, k) = hnext;
    if (!std::isfinite(hnext)) {
      out.status = GmresStatus::Breakdown;
      return out;
    }

    for (int j = 0; j < k; ++j) {
      const double t = cs[j] * H(j, k) + sn[j] * H(j + 1, k);
      H(j + 1, k) = -sn[j] * H(j, k) + cs[j] * H(j + 1, k);
      H(j, k) = t;
    }
    const double a = H(k, k);
    const double b = H(k + 1, k);
    const double rr = std::hypot(a, b);
    if (rr == 0.0) {
      out.status = GmresStatus::Breakdown;
      return out;
    }
    cs[k] = a / rr;
    sn[k] = b / rr;
    H(k, k) = rr;
    H(k + 1, k) = 0.0;
    g[k + 1] = -sn[k] * g[k];
    g[k] = cs[k] * g[k];

    const double rel = std::abs(g[k + 1]) / beta;
    out.residual_history.push_back(rel);
    out.rel_residual = rel;

    const bool happy = hnext <= 1e-14 * beta;
    if (happy) {
      out.status = GmresStatus::HappyBreakdown;
      done = true;
    } else if (rel <= tol) {
      out.status = GmresStatus::Converged;
      done = true;
    } else {
      V.emplace_back(w / hnext);
    }
  }
  if (!done) out.status = GmresStatus::MaxIterations;
  out.iterations = k;

  Vec y = Vec::Zero(k);
  for (int i = k - 1; i >= 0; --i) {
    double s = g[i];
    for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[j];
    y[i] = s / H(i, i);
  }
  for (int j = 0; j < k; ++j) out.x.noalias() += y[j] * V[static_cast<std::size_t>(j)];
  if (!out.x.allFinite()) out.status = GmresStatus::Breakdown;
  return out;
}

}  // namespace pcaopt
