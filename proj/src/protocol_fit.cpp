#include "pcaopt/protocol_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pcaopt {

std::string to_string(FitTemplate t) {
  switch (t) {
    case FitTemplate::Docetaxel1: return "1-dose docetaxel";
    case FitTemplate::Docetaxel3: return "3-dose docetaxel";
    case FitTemplate::NewDrug1: return "1-dose new drug";
    case FitTemplate::NewDrug3: return "3-dose new drug";
  }
  return "";
}

int dose_count(FitTemplate t) {
  return (t == FitTemplate::Docetaxel3 || t == FitTemplate::NewDrug3) ? 3 : 1;
}

bool free_tau(FitTemplate t) { return t == FitTemplate::NewDrug1 || t == FitTemplate::NewDrug3; }

namespace {

int param_count(FitTemplate t) { return dose_count(t) == 3 ? 5 + (free_tau(t) ? 1 : 0) : 1 + (free_tau(t) ? 1 : 0); }

}  // namespace

void FitProblem::validate() const {
  if (t.size() != target.size() || t.size() < 2) throw InvalidParameter("fit target needs matching t and U samples");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || !std::isfinite(target[i])) throw InvalidParameter("fit target has non-finite samples");
  }
  if (!(bounds.dose_lo <= bounds.dose_hi) || !(bounds.time_lo <= bounds.time_hi) || !(bounds.tau_lo <= bounds.tau_hi) ||
      !(bounds.tau_lo > 0.0)) {
    throw InvalidParameter("invalid fit bounds");
  }
  if (!(tau_fixed > 0.0)) throw InvalidParameter("fixed decay time must be positive");
  if (max_iters < 1 || !(tolerance > 0.0)) throw InvalidParameter("invalid fit solver settings");
}

ParamVec default_start(FitTemplate t) {
  ParamVec p(param_count(t));
  if (dose_count(t) == 3) {
    p.head(5) << 25.0, 25.0, 25.0, 7.0, 14.0;
  } else {
    p[0] = 75.0;
  }
  if (free_tau(t)) p[p.size() - 1] = 5.0;
  return p;
}

DrugProtocol to_protocol(const FitProblem& pb, const ParamVec& theta) {
  DrugProtocol p;
  p.kind = DrugKind::Cytotoxic;
  p.beta = pb.beta;
  p.m_ref_factor = true;
  const int nd = dose_count(pb.tmpl);
  for (int i = 0; i < nd; ++i) p.doses.push_back(theta[i]);
  p.delivery_times.push_back(0.0);
  if (nd == 3) {
    p.delivery_times.push_back(theta[3]);
    p.delivery_times.push_back(theta[4]);
  }
  p.tau = free_tau(pb.tmpl) ? theta[theta.size() - 1] : pb.tau_fixed;
  return p;
}

ParamVec from_protocol(FitTemplate t, const DrugProtocol& p) {
  ParamVec th(param_count(t));
  const int nd = dose_count(t);
  if (static_cast<int>(p.doses.size()) != nd) throw InvalidParameter("protocol dose count does not match the template");
  for (int i = 0; i < nd; ++i) th[i] = p.doses[static_cast<std::size_t>(i)];
  if (nd == 3) {
    th[3] = p.delivery_times[1];
    th[4] = p.delivery_times[2];
  }
  if (free_tau(t)) th[th.size() - 1] = p.tau;
  return th;
}

Eigen::VectorXd model_curve(const FitProblem& pb, const ParamVec& theta) {
  const DrugProtocol p = to_protocol(pb, theta);
  Eigen::VectorXd f(static_cast<Eigen::Index>(pb.t.size()));
  for (std::size_t i = 0; i < pb.t.size(); ++i) f[static_cast<Eigen::Index>(i)] = protocol_effect(p, pb.t[i], pb.m_ref);
  return f;
}

Eigen::MatrixXd model_jacobian(const FitProblem& pb, const ParamVec& theta) {
  const DrugProtocol p = to_protocol(pb, theta);
  const int nd = dose_count(pb.tmpl);
  const double cb = pb.m_ref * pb.beta;
  const double tau = p.tau;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pb.t.size()), theta.size());
  for (std::size_t r = 0; r < pb.t.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    for (int i = 0; i < nd; ++i) {
      const double lag = pb.t[r] - p.delivery_times[static_cast<std::size_t>(i)];
      if (lag < 0.0) continue;
      const double e = std::exp(-lag / tau);
      const double d = p.doses[static_cast<std::size_t>(i)];
      J(row, i) = cb * e;
      if (i > 0) J(row, 2 + i) = cb * d / tau * e;
      if (free_tau(pb.tmpl)) J(row, theta.size() - 1) += cb * d * lag / (tau * tau) * e;
    }
  }
  return J;
}

GoodnessOfFit goodness_of_fit(const std::vector<double>& ref, const std::vector<double>& model) {
  if (ref.size() != model.size() || ref.empty()) throw InvalidParameter("goodness of fit needs equal-length series");
  double mean = 0.0;
  for (double v : ref) mean += v;
  mean /= static_cast<double>(ref.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    ss_res += (ref[i] - model[i]) * (ref[i] - model[i]);
    ss_tot += (ref[i] - mean) * (ref[i] - mean);
  }
  GoodnessOfFit g;
  g.rmse = std::sqrt(ss_res / static_cast<double>(ref.size()));
  if (ss_tot > 0.0) {
    g.r2 = 1.0 - ss_res / ss_tot;
  } else {
    g.r2_defined = false;
    g.r2 = std::numeric_limits<double>::quiet_NaN();
  }
  return g;
}

namespace {

// Internal coordinates replace (t2, t3) by the gaps (t2, t3 - t2).
struct Coords {
  const FitProblem* pb;
  int nd;

  ParamVec to_internal(const ParamVec& th) const {
    ParamVec x = th;
    if (nd == 3) x[4] = th[4] - th[3];
    return x;
  }
  ParamVec to_natural(const ParamVec& x) const {
    ParamVec th = x;
    if (nd == 3) th[4] = x[3] + x[4];
    return th;
  }
  void bounds(const ParamVec& x, ParamVec& lo, ParamVec& hi) const {
    const auto& b = pb->bounds;
    lo.resize(x.size());
    hi.resize(x.size());
    for (int i = 0; i < nd; ++i) {
      lo[i] = b.dose_lo;
      hi[i] = b.dose_hi;
    }
    if (nd == 3) {
      lo[3] = b.time_lo;
      hi[3] = b.time_hi;
      lo[4] = 0.0;
      hi[4] = std::max(0.0, b.time_hi - std::clamp(x[3], b.time_lo, b.time_hi));
    }
    if (free_tau(pb->tmpl)) {
      lo[x.size() - 1] = b.tau_lo;
      hi[x.size() - 1] = b.tau_hi;
    }
  }
  ParamVec project(const ParamVec& x) const {
    ParamVec y = x;
    ParamVec lo, hi;
    bounds(y, lo, hi);
    for (int i = 0; i < y.size(); ++i) y[i] = std::clamp(y[i], lo[i], hi[i]);
    if (nd == 3) {
      bounds(y, lo, hi);
      y[4] = std::clamp(y[4], lo[4], hi[4]);
    }
    return y;
  }
  Eigen::MatrixXd jacobian(const ParamVec& x) const {
    Eigen::MatrixXd J = model_jacobian(*pb, to_natural(x));
    if (nd == 3) J.col(3) += J.col(4);
    return J;
  }
};

}  // namespace

namespace {

struct LmOutcome {
  ParamVec x;  // internal coordinates
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

LmOutcome run_lm(const FitProblem& pb, const Coords& cs, const Eigen::Map<const Eigen::VectorXd>& y, ParamVec x,
                 int max_iters, bool freeze_times = false) {
  auto residual = [&](const ParamVec& xi) {
    Eigen::VectorXd r = model_curve(pb, cs.to_natural(xi)) - y;
    if (!r.allFinite()) throw InvalidParameter("non-finite fit residual");
    return r;
  };
  LmOutcome out;
  Eigen::VectorXd r = residual(x);
  double cost = 0.5 * r.squaredNorm();
  out.history.push_back(cost);
  double lambda = 1e-3;
  double g0 = 0.0;
  ParamVec lo, hi;
  for (int it = 0; it < max_iters; ++it) {
    out.iterations = it + 1;
    const Eigen::MatrixXd J = cs.jacobian(x);
    const Eigen::VectorXd g = J.transpose() * r;
    ParamVec pg = x - cs.project(x - g);
    if (freeze_times && cs.nd == 3) pg[3] = pg[4] = 0.0;
    if (it == 0) g0 = std::max(pg.cwiseAbs().maxCoeff(), 1e-300);
    if (pg.cwiseAbs().maxCoeff() <= pb.tolerance * g0 || cost == 0.0) {
      out.converged = true;
      break;
    }
    cs.bounds(x, lo, hi);
    std::vector<int> free;
    for (int i = 0; i < x.size(); ++i) {
      const bool at_lo = x[i] <= lo[i] && g[i] > 0.0;
      const bool at_hi = x[i] >= hi[i] && g[i] < 0.0;
      const bool frozen = freeze_times && cs.nd == 3 && (i == 3 || i == 4);
      if (!at_lo && !at_hi && !frozen) free.push_back(i);
    }
    if (free.empty()) {
      out.converged = true;
      break;
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd H(nf, nf);
    Eigen::VectorXd gf(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      gf[a] = g[free[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < nf; ++b) {
        H(a, b) = J.col(free[static_cast<std::size_t>(a)]).dot(J.col(free[static_cast<std::size_t>(b)]));
      }
    }
    const Eigen::VectorXd dH = H.diagonal().cwiseMax(1e-30);
    bool accepted = false;
    while (!accepted && lambda < 1e16) {
      Eigen::MatrixXd A = H;
      A.diagonal() += lambda * dH;
      const Eigen::VectorXd d = A.ldlt().solve(-gf);
      ParamVec xn = x;
      for (Eigen::Index a = 0; a < nf; ++a) xn[free[static_cast<std::size_t>(a)]] += d[a];
      xn = cs.project(xn);
      const Eigen::VectorXd rn = residual(xn);
      const double cn = 0.5 * rn.squaredNorm();
      if (cn < cost) {
        accepted = true;
        x = xn;
        r = rn;
        cost = cn;
        out.history.push_back(cost);
        lambda = std::max(lambda / 3.0, 1e-12);
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) {
      // no descent left at machine precision
      out.converged = pg.cwiseAbs().maxCoeff() <= std::sqrt(pb.tolerance) * g0;
      break;
    }
  }
  out.x = x;
  out.cost = cost;
  return out;
}

// Bounded least squares for three doses given the Gram matrix G and b = B^T y.
double dose_lsq(const Eigen::Matrix3d& G, const Eigen::Vector3d& b, double lo, double hi, Eigen::Vector3d& d) {
  auto value = [&](const Eigen::Vector3d& v) { return v.dot(G * v) - 2.0 * b.dot(v); };
  d.setConstant(lo);
  Eigen::Vector3d u = G.ldlt().solve(b);
  if (u.allFinite() && (u.array() >= lo).all() && (u.array() <= hi).all()) {
    d = u;
    return value(u);
  }
  double best = std::numeric_limits<double>::infinity();
  for (int code = 0; code < 27; ++code) {
    int c = code;
    std::array<int, 3> st{};  // 0 free, 1 lo, 2 hi
    for (int i = 0; i < 3; ++i) {
      st[static_cast<std::size_t>(i)] = c % 3;
      c /= 3;
    }
    Eigen::Vector3d v;
    std::vector<int> fr;
    for (int i = 0; i < 3; ++i) {
      const int s = st[static_cast<std::size_t>(i)];
      v[i] = s == 1 ? lo : (s == 2 ? hi : 0.0);
      if (s == 0) fr.push_back(i);
    }
    if (!fr.empty()) {
      const auto n = static_cast<Eigen::Index>(fr.size());
      Eigen::MatrixXd A(n, n);
      Eigen::VectorXd rhs(n);
      for (Eigen::Index a = 0; a < n; ++a) {
        rhs[a] = b[fr[static_cast<std::size_t>(a)]];
        for (int j = 0; j < 3; ++j) {
          if (st[static_cast<std::size_t>(j)] != 0) rhs[a] -= G(fr[static_cast<std::size_t>(a)], j) * v[j];
        }
        for (Eigen::Index e = 0; e < n; ++e) A(a, e) = G(fr[static_cast<std::size_t>(a)], fr[static_cast<std::size_t>(e)]);
      }
      const Eigen::VectorXd sol = A.ldlt().solve(rhs);
      bool ok = sol.allFinite();
      for (Eigen::Index a = 0; a < n && ok; ++a) ok = sol[a] >= lo && sol[a] <= hi;
      if (!ok) continue;
      for (Eigen::Index a = 0; a < n; ++a) v[fr[static_cast<std::size_t>(a)]] = sol[a];
    }
    const double f = value(v);
    if (f < best) {
      best = f;
      d = v;
    }
  }
  return best;
}

// Three-dose sampled least squares with t1 = 0 and t2, t3 on sample points.
// For a fixed tau the doses enter linearly; Gram entries come from suffix
// sums, so each (t2, t3) pair costs O(1).
class PairScanner {
 public:
  explicit PairScanner(const FitProblem& pb) : pb_(&pb), e2_(pb.t.size() + 1), ey_(pb.t.size() + 1) {}

  void prepare(double tau) {
    const auto& t = pb_->t;
    const std::size_t N = t.size();
    tau_ = tau;
    e2_[N] = ey_[N] = 0.0;
    for (std::size_t i = N; i-- > 0;) {
      e2_[i] = e2_[i + 1] + std::exp(-2.0 * (t[i] - t.back()) / tau);
      ey_[i] = ey_[i + 1] + pb_->target[i] * std::exp(-(t[i] - t.back()) / tau);
    }
  }

  // Half the squared residual minus the constant 0.5 |y|^2.
  double eval(std::size_t k2, std::size_t k3, Eigen::Vector3d& d) const {
    const auto& t = pb_->t;
    const std::array<std::size_t, 3> k{0, k2, k3};
    Eigen::Matrix3d G;
    Eigen::Vector3d b;
    const double cb = pb_->m_ref * pb_->beta;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t f = std::max(k[i], k[j]);
        G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            cb * cb * std::exp((time(k[i]) + time(k[j]) - 2.0 * t.back()) / tau_) * e2_[f];
      }
      b[static_cast<Eigen::Index>(i)] = cb * std::exp((time(k[i]) - t.back()) / tau_) * ey_[k[i]];
    }
    return 0.5 * dose_lsq(G, b, pb_->bounds.dose_lo, pb_->bounds.dose_hi, d);
  }

  [[nodiscard]] double time(std::size_t k) const { return k == 0 ? 0.0 : pb_->t[k]; }

 private:
  const FitProblem* pb_;
  std::vector<double> e2_, ey_;
  double tau_ = 1.0;
};

std::size_t sample_index(const std::vector<double>& t, double v) {
  const auto it = std::lower_bound(t.begin(), t.end(), v - 1e-12);
  return std::min(static_cast<std::size_t>(it - t.begin()), t.size() - 1);
}

bool time_ok(const FitProblem& pb, double v) { return v >= pb.bounds.time_lo && v <= pb.bounds.time_hi; }

// Lattice of delivery times about 0.1 day apart (and of tau when free).
ParamVec lattice_seed(const FitProblem& pb) {
  const auto& t = pb.t;
  const std::size_t N = t.size();
  const double h = (t.back() - t.front()) / static_cast<double>(N - 1);
  const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(0.1 / h)));
  std::vector<std::size_t> lat;
  for (std::size_t i = 0; i < N; i += stride) {
    if (time_ok(pb, t[i])) lat.push_back(i);
  }
  std::vector<double> taus;
  if (free_tau(pb.tmpl)) {
    for (double v = pb.bounds.tau_lo; v <= pb.bounds.tau_hi + 1e-12; v += 0.25) taus.push_back(v);
  } else {
    taus.push_back(pb.tau_fixed);
  }
  PairScanner sc(pb);
  double best = std::numeric_limits<double>::infinity();
  ParamVec seed = default_start(pb.tmpl);
  Eigen::Vector3d d;
  for (double tau : taus) {
    sc.prepare(tau);
    for (std::size_t a = 0; a < lat.size(); ++a) {
      for (std::size_t c = a; c < lat.size(); ++c) {
        const double f = sc.eval(lat[a], lat[c], d);
        if (f < best) {
          best = f;
          seed.head(3) = d;
          seed[3] = t[lat[a]];
          seed[4] = t[lat[c]];
          if (free_tau(pb.tmpl)) seed[5] = tau;
        }
      }
    }
  }
  return seed;
}

// Pins t2, t3 to the first sample receiving each dose. On a sampled grid a
// delivery time is only identifiable up to the gap between two samples (dose
// and time trade off through d exp(t / tau)), so the curve is unchanged.
ParamVec snap_times(const FitProblem& pb, ParamVec th) {
  const auto& t = pb.t;
  const double tau = free_tau(pb.tmpl) ? th[th.size() - 1] : pb.tau_fixed;
  for (int i = 3; i <= 4; ++i) {
    const double ts = std::min(t[sample_index(t, th[i])], pb.bounds.time_hi);
    th[i - 2] = std::clamp(th[i - 2] * std::exp((th[i] - ts) / tau), pb.bounds.dose_lo, pb.bounds.dose_hi);
    th[i] = ts;
  }
  return th;
}

// Alternates a windowed (t2, t3) scan at fixed tau with a local solve for
// doses and tau at fixed times, until neither improves.
LmOutcome bracket_walk(const FitProblem& pb, const Coords& cs, const Eigen::Map<const Eigen::VectorXd>& y,
                       const ParamVec& start) {
  const auto& t = pb.t;
  const std::size_t N = t.size();
  const double h = (t.back() - t.front()) / static_cast<double>(N - 1);
  const long W = static_cast<long>(std::max(2.0, std::ceil(0.1 / h) + 1.0));
  const double yy = 0.5 * y.squaredNorm();
  PairScanner sc(pb);
  LmOutcome cur = run_lm(pb, cs, y, cs.project(cs.to_internal(snap_times(pb, start))), pb.max_iters, true);
  int iters = cur.iterations;
  for (int round = 0; round < 1000; ++round) {
    ParamVec th = cs.to_natural(cur.x);
    const double tau = free_tau(pb.tmpl) ? th[th.size() - 1] : pb.tau_fixed;
    sc.prepare(tau);
    const auto k2 = static_cast<long>(sample_index(t, th[3]));
    const auto k3 = static_cast<long>(sample_index(t, th[4]));
    double best = std::numeric_limits<double>::infinity();
    long b2 = k2, b3 = k3;
    Eigen::Vector3d d, bd = Eigen::Vector3d::Zero();
    for (long a = std::max(1L, k2 - W); a <= std::min(static_cast<long>(N) - 1, k2 + W); ++a) {
      if (!time_ok(pb, t[static_cast<std::size_t>(a)])) continue;
      for (long c = std::max(a, k3 - W); c <= std::min(static_cast<long>(N) - 1, k3 + W); ++c) {
        if (!time_ok(pb, t[static_cast<std::size_t>(c)])) continue;
        const double f = sc.eval(static_cast<std::size_t>(a), static_cast<std::size_t>(c), d);
        if (f < best) {
          best = f;
          b2 = a;
          b3 = c;
          bd = d;
        }
      }
    }
    if (!(yy + best < cur.cost * (1.0 - 1e-12))) break;
    th[0] = bd[0];
    th[1] = bd[1];
    th[2] = bd[2];
    th[3] = t[static_cast<std::size_t>(b2)];
    th[4] = t[static_cast<std::size_t>(b3)];
    LmOutcome cand = run_lm(pb, cs, y, cs.project(cs.to_internal(th)), pb.max_iters, true);
    iters += cand.iterations;
    if (!(cand.cost < cur.cost)) break;
    cur = std::move(cand);
  }
  cur.iterations = iters;
  return cur;
}

}  // namespace

FitResult fit_protocol(const FitProblem& pb, const ParamVec& start) {
  pb.validate();
  const ParamVec th0 = start.size() == 0 ? default_start(pb.tmpl) : start;
  if (th0.size() != param_count(pb.tmpl)) throw InvalidParameter("start vector has the wrong length");
  const Coords cs{&pb, dose_count(pb.tmpl)};
  const Eigen::Map<const Eigen::VectorXd> y(pb.target.data(), static_cast<Eigen::Index>(pb.target.size()));

  ParamVec x0 = cs.to_internal(th0);
  if (start.size() == 0) x0 = cs.project(x0);
  if ((cs.project(x0) - x0).cwiseAbs().maxCoeff() > 1e-12) throw InvalidParameter("fit start lies outside the bounds");
  LmOutcome best = run_lm(pb, cs, y, x0, pb.max_iters);
  if (dose_count(pb.tmpl) == 3 && best.cost > 0.0) {
    // the sampled cost jumps whenever a delivery time crosses a sample, so
    // refine on sample-pinned times from both the local and a lattice start
    for (const ParamVec& s : {cs.to_natural(best.x), lattice_seed(pb)}) {
      LmOutcome alt = bracket_walk(pb, cs, y, s);
      if (alt.cost < best.cost) best = std::move(alt);
    }
  }

  FitResult res;
  res.tmpl = pb.tmpl;
  res.theta = cs.to_natural(best.x);
  res.protocol = to_protocol(pb, res.theta);
  res.cost = best.cost;
  res.iterations = best.iterations;
  res.converged = best.converged;
  res.cost_history = std::move(best.history);
  const Eigen::VectorXd f = model_curve(pb, res.theta);
  res.gof = goodness_of_fit(pb.target, std::vector<double>(f.data(), f.data() + f.size()));
  return res;
}

std::vector<FitResult> fit_all_templates(const FitProblem& base) {
  std::vector<FitResult> out(kAllTemplates.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int k = 0; k < 2; ++k) {
    // one chain per drug: one dose, then three doses seeded from it
    FitProblem p = base;
    const FitTemplate one = k == 0 ? FitTemplate::Docetaxel1 : FitTemplate::NewDrug1;
    const FitTemplate three = k == 0 ? FitTemplate::Docetaxel3 : FitTemplate::NewDrug3;
    p.tmpl = one;
    out[static_cast<std::size_t>(2 * k)] = fit_protocol(p);
    p.tmpl = three;
    FitResult a = fit_protocol(p);
    ParamVec seed = default_start(three);
    const ParamVec& s1 = out[static_cast<std::size_t>(2 * k)].theta;
    seed[0] = s1[0];
    seed[1] = seed[2] = 0.0;
    if (free_tau(three)) seed[seed.size() - 1] = s1[s1.size() - 1];
    FitResult b = fit_protocol(p, seed);
    out[static_cast<std::size_t>(2 * k + 1)] = b.cost < a.cost ? b : a;
  }
  // new-drug fits may also start from the docetaxel optimum (tau = tau_fixed)
  for (int k = 0; k < 2; ++k) {
    FitProblem p = base;
    const auto dtx = out[static_cast<std::size_t>(k)];
    p.tmpl = kAllTemplates[static_cast<std::size_t>(2 + k)];
    ParamVec seed(dtx.theta.size() + 1);
    seed.head(dtx.theta.size()) = dtx.theta;
    seed[seed.size() - 1] = std::clamp(base.tau_fixed, base.bounds.tau_lo, base.bounds.tau_hi);
    FitResult c = fit_protocol(p, seed);
    auto& cur = out[static_cast<std::size_t>(2 + k)];
    if (c.cost < cur.cost) cur = c;
  }
  return out;
}

}  // namespace pcaopt
