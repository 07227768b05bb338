#include "pcaopt/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

namespace pcaopt {

SolverSettings solver_settings(const SolverConfig& c) {
  SolverSettings s;
  s.eps_NL = c.eps_NL;
  s.eps_L = c.eps_L;
  s.max_linear_iters = c.max_linear_iters;
  s.max_newton_iters = c.max_newton_iters;
  s.parallel = c.assembly != "serial";
  return s;
}

ForwardOptions forward_options(const RunConfig& cfg) {
  ForwardOptions o;
  o.scheme = alpha_coeffs(cfg.solver.rho_inf);
  o.solver = solver_settings(cfg.solver);
  o.dt = cfg.time.dt;
  o.mode = cfg.solver.assembly == "serial" ? AssemblyMode::Serial : AssemblyMode::Colored;
  return o;
}

ObjectiveSpec objective_spec(const RunConfig& cfg, const SplineSpace& space) {
  ObjectiveSpec s;
  std::copy(cfg.objective.k.begin(), cfg.objective.k.end(), s.k.begin());
  s.variant = variant_from_string(cfg.objective.variant);
  s.area_scale = cfg.objective.area_scale;
  apply_default_targets(s, cfg.model, space);
  s.phi_Q = cfg.objective.phi_Q;
  s.phi_Omega = cfg.objective.phi_Omega;
  if (cfg.objective.p_Omega) s.p_Omega = *cfg.objective.p_Omega;
  s.validate();
  return s;
}

ControlTrajectory initial_controls(const RunConfig& cfg) {
  const auto& c = cfg.controls;
  const int N = step_count(cfg.time.T, cfg.time.dt);
  const auto z = ControlTrajectory::zeros(cfg.time.T, N, c.U_max, c.S_max);
  if (c.initial == "zero") return z;
  std::vector<double> U(z.size()), S(z.size());
  if (c.initial == "max") {
    std::fill(U.begin(), U.end(), c.U_max);
    std::fill(S.begin(), S.end(), c.S_max);
  } else {
    DrugProtocol doc{DrugKind::Cytotoxic, c.docetaxel.doses, c.docetaxel.times, c.docetaxel.tau, c.docetaxel.beta, true};
    DrugProtocol bev{DrugKind::Antiangiogenic, c.bevacizumab.doses, c.bevacizumab.times, c.bevacizumab.tau,
                     c.bevacizumab.beta, false};
    doc.validate();
    bev.validate();
    for (std::size_t i = 0; i < z.size(); ++i) {
      U[i] = std::min(protocol_effect(doc, z.t()[i], cfg.model.m_ref), c.U_max);
      S[i] = std::min(protocol_effect(bev, z.t()[i], cfg.model.m_ref), c.S_max);
    }
  }
  return ControlTrajectory(z.t(), std::move(U), std::move(S), c.U_max, c.S_max);
}

Pipeline make_pipeline(const RunConfig& cfg) {
  cfg.validate();
  Pipeline p{std::make_unique<SplineSpace>(SplineSpace::build(cfg.grid.elements, cfg.grid.length)), {},
             initial_controls(cfg)};
  auto& pb = p.problem;
  pb.space = p.space.get();
  pb.params = cfg.model;
  pb.T = cfg.time.T;
  pb.forward = forward_options(cfg);
  pb.objective = objective_spec(cfg, *p.space);
  const Vec Y0 = make_initial_conditions(*p.space, cfg.initial);
  pb.start = pregrow(*p.space, Y0, pb.params, cfg.time.pregrow, pb.forward);
  return p;
}

ControlTrajectory read_controls(const std::string& path, const RunConfig& cfg) {
  const CsvTable tab = read_csv(path);
  const auto t = tab.column("t");
  auto U = tab.column("U");
  auto S = tab.column("S");
  const auto grid = ControlTrajectory::zeros(cfg.time.T, step_count(cfg.time.T, cfg.time.dt), cfg.controls.U_max,
                                             cfg.controls.S_max);
  if (t.size() != grid.size()) {
    throw ConfigError(path + ": " + std::to_string(t.size()) + " samples, the treatment grid has " +
                      std::to_string(grid.size()));
  }
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(t[i] - grid.t()[i]) > 1e-9 * std::max(1.0, cfg.time.T)) {
      throw ConfigError(path + ": sample " + std::to_string(i) + " is off the treatment grid");
    }
  }
  return ControlTrajectory(grid.t(), std::move(U), std::move(S), cfg.controls.U_max, cfg.controls.S_max);
}

ControlDirection smooth_direction(const std::vector<double>& t, double T, double U_max, double S_max,
                                  unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  double a[3], b[3];
  for (double& v : a) v = ud(rng);
  for (double& v : b) v = ud(rng);
  ControlDirection d{t, std::vector<double>(t.size()), std::vector<double>(t.size())};
  const double pi = std::acos(-1.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = pi * t[i] / T;
    d.dU[i] = U_max * (a[0] + a[1] * std::cos(x) + a[2] * std::cos(2.0 * x)) / 3.0;
    d.dS[i] = S_max * (b[0] + b[1] * std::cos(x) + b[2] * std::cos(2.0 * x)) / 3.0;
  }
  return d;
}

namespace {

double rel_err(double a, double ref) { return ref != 0.0 ? std::abs(a - ref) / std::abs(ref) : std::abs(a - ref); }

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.output.dir) / name).string();
}

std::vector<QoiRow> reported_qoi(const RunConfig& cfg, const StateTrajectory& traj) {
  auto rows = qoi_series(traj, 1.0);
  for (auto& r : rows) {
    r.v_phi *= cfg.output.volume_scale;
    r.P_s *= cfg.output.psa_scale;
  }
  return rows;
}

int lattice_points(const RunConfig& cfg) {
  return cfg.output.lattice > 0 ? cfg.output.lattice : 2 * cfg.grid.elements + 1;
}

void write_snapshot(const RunConfig& cfg, const SplineSpace& space, const Vec& Y, double t, int step,
                    const std::string& header) {
  const std::string dir = out_path(cfg, "snapshots");
  ensure_directory(dir);
  char stem[32];
  std::snprintf(stem, sizeof stem, "step_%05d", step);
  const Snapshot s = make_snapshot(space, Y, t, lattice_points(cfg));
  const std::string base = (std::filesystem::path(dir) / stem).string();
  if (cfg.output.vtk) write_vtk(base + ".vtk", header, s);
  if (cfg.output.binary) write_binary(base, cfg, s);
  std::snprintf(stem, sizeof stem, "contour_%05d.csv", step);
  write_contour_csv((std::filesystem::path(dir) / stem).string(), header, isoline(s.phi, s.n, s.L, 0.5));
}

bool snapshot_due(const RunConfig& cfg, int n, int steps) {
  const int every = cfg.output.snapshot_every;
  if (every <= 0) return n == 0 || n == steps;
  return n % every == 0 || n == steps;
}

// Forward march writing snapshots on the output cadence.
StateTrajectory march_with_snapshots(const RunConfig& cfg, const Pipeline& p, const ControlTrajectory& c,
                                     const std::string& header) {
  ForwardOptions o = p.problem.forward;
  o.store = false;
  const int steps = step_count(cfg.time.T, cfg.time.dt);
  return solve_forward(*p.space, p.problem.start, p.problem.params, c, cfg.time.T, o,
                       [&](int n, double t, const Vec& Y) {
                         if (snapshot_due(cfg, n, steps)) write_snapshot(cfg, *p.space, Y, t, n, header);
                       });
}

void write_summary(const std::string& path, const std::string& header, const StateTrajectory& traj) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write '" + path + "'");
  const auto& b = traj.bounds;
  f << header;
  f << "phi_min " << format_number(b.phi_min) << "\nphi_max " << format_number(b.phi_max) << "\n";
  f << "sigma_min " << format_number(b.sigma_min) << "\nsigma_max " << format_number(b.sigma_max) << "\n";
  f << "p_min " << format_number(b.p_min) << "\np_max " << format_number(b.p_max) << "\n";
  f << "steps " << traj.steps() << "\nnewton_iters " << traj.stats.newton_iters << "\nlinear_iters "
    << traj.stats.linear_iters << "\ncapped_solves " << traj.stats.capped_solves << "\n";
  if (!f) throw IoError("write failed for '" + path + "'");
}

std::string slug(FitTemplate t) {
  switch (t) {
    case FitTemplate::Docetaxel1: return "docetaxel_1";
    case FitTemplate::Docetaxel3: return "docetaxel_3";
    case FitTemplate::NewDrug1: return "new_1";
    case FitTemplate::NewDrug3: return "new_3";
  }
  return "unknown";
}

}  // namespace

void cmd_forward(const RunConfig& cfg) {
  ensure_directory(cfg.output.dir);
  const Pipeline p = make_pipeline(cfg);
  const std::string header = config_header(cfg, "pcaopt forward");
  const StateTrajectory traj = march_with_snapshots(cfg, p, p.initial, header);
  write_qoi_csv(out_path(cfg, "qoi.csv"), header, reported_qoi(cfg, traj));
  write_controls_csv(out_path(cfg, "controls.csv"), header, p.initial);
  write_summary(out_path(cfg, "summary.txt"), header, traj);
}

void cmd_export_snapshots(const RunConfig& cfg) {
  ensure_directory(cfg.output.dir);
  const Pipeline p = make_pipeline(cfg);
  const std::string src = out_path(cfg, "controls.csv");
  const ControlTrajectory c = std::filesystem::exists(src) ? read_controls(src, cfg) : p.initial;
  (void)march_with_snapshots(cfg, p, c, config_header(cfg, "pcaopt export-snapshots"));
}

void cmd_optimize(const RunConfig& cfg) {
  ensure_directory(cfg.output.dir);
  const Pipeline p = make_pipeline(cfg);
  const std::string header = config_header(cfg, "pcaopt optimize");
  const std::string log_path = out_path(cfg, "iterations.csv");
  std::vector<IterationLog> log;
  const DescentResult r = steepest_descent(p.problem, p.initial, cfg.descent, [&](const IterationLog& row) {
    log.push_back(row);
    write_iteration_log(log_path, header, log);
  });
  write_iteration_log(log_path, header, r.log);
  write_controls_csv(out_path(cfg, "controls.csv"), header, r.controls);
  write_controls_csv(out_path(cfg, "controls_initial.csv"), header, p.initial);
  write_qoi_csv(out_path(cfg, "qoi.csv"), header, reported_qoi(cfg, r.forward));
  {
    ForwardOptions o = p.problem.forward;
    o.store = false;
    const auto init = solve_forward(*p.space, p.problem.start, p.problem.params, p.initial, cfg.time.T, o);
    write_qoi_csv(out_path(cfg, "qoi_initial.csv"), header, reported_qoi(cfg, init));
  }
  write_kkt_report(out_path(cfg, "kkt.txt"), header, verify_kkt(p.problem.objective, r.controls, r.gradient),
                   cfg.controls.U_max, cfg.controls.S_max);
  write_summary(out_path(cfg, "summary.txt"), header, r.forward);
  const int steps = static_cast<int>(r.forward.steps());
  for (int n = 0; n <= steps; ++n) {
    if (snapshot_due(cfg, n, steps)) {
      write_snapshot(cfg, *p.space, r.forward.Y[static_cast<std::size_t>(n)], r.forward.t[static_cast<std::size_t>(n)], n,
                     header);
    }
  }
}

void cmd_fit_protocol(const RunConfig& cfg) {
  ensure_directory(cfg.output.dir);
  cfg.validate();
  const std::string target_path = cfg.fit.target.empty() ? out_path(cfg, "controls.csv") : cfg.fit.target;
  if (!std::filesystem::exists(target_path)) throw IoError("fit target '" + target_path + "' not found");
  const ControlTrajectory target = read_controls(target_path, cfg);

  FitProblem base;
  base.t = target.t();
  base.target = target.U();
  base.m_ref = cfg.model.m_ref;
  base.beta = cfg.controls.docetaxel.beta;
  base.tau_fixed = cfg.controls.docetaxel.tau;
  base.bounds = {cfg.fit.dose_lo, cfg.fit.dose_hi, cfg.fit.time_lo, cfg.fit.time_hi, cfg.fit.tau_lo, cfg.fit.tau_hi};
  base.tolerance = cfg.fit.tolerance;
  base.max_iters = cfg.fit.max_iters;
  const auto fits = fit_all_templates(base);

  const std::string header = config_header(cfg, "pcaopt fit-protocol");
  std::vector<ProtocolEvaluation> rows;
  std::vector<std::string> cols{"t", "target"};
  std::vector<std::vector<double>> curves(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) curves[i] = {target.t()[i], target.U()[i]};
  std::vector<ControlTrajectory> fitted;
  for (const auto& f : fits) {
    cols.push_back(slug(f.tmpl));
    std::vector<double> U(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) {
      U[i] = project_box(protocol_effect(f.protocol, target.t()[i], cfg.model.m_ref), 0.0, cfg.controls.U_max);
      curves[i].push_back(protocol_effect(f.protocol, target.t()[i], cfg.model.m_ref));
    }
    fitted.emplace_back(target.t(), std::move(U), target.S(), cfg.controls.U_max, cfg.controls.S_max);
    rows.push_back({f, {}, {}, false});
  }
  write_csv(out_path(cfg, "fit_curves.csv"), header, cols, curves);

  if (cfg.fit.simulate) {
    const Pipeline p = make_pipeline(cfg);
    ForwardOptions o = p.problem.forward;
    o.store = false;
    auto run = [&](const ControlTrajectory& c) {
      return reported_qoi(cfg, solve_forward(*p.space, p.problem.start, p.problem.params, c, cfg.time.T, o));
    };
    const auto ref = run(target);
    std::vector<std::string> qcols{"t", "v_target", "P_target"};
    std::vector<std::vector<double>> q(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) q[i] = {ref[i].t, ref[i].v_phi, ref[i].P_s};
    std::vector<double> vr, pr;
    for (const auto& r : ref) {
      vr.push_back(r.v_phi);
      pr.push_back(r.P_s);
    }
    for (std::size_t k = 0; k < fits.size(); ++k) {
      const auto sim = run(fitted[k]);
      std::vector<double> vs, ps;
      for (std::size_t i = 0; i < sim.size(); ++i) {
        vs.push_back(sim[i].v_phi);
        ps.push_back(sim[i].P_s);
        q[i].push_back(sim[i].v_phi);
        q[i].push_back(sim[i].P_s);
      }
      qcols.push_back("v_" + slug(fits[k].tmpl));
      qcols.push_back("P_" + slug(fits[k].tmpl));
      rows[k].volume = goodness_of_fit(vr, vs);
      rows[k].psa = goodness_of_fit(pr, ps);
      rows[k].simulated = true;
    }
    write_csv(out_path(cfg, "fit_qoi.csv"), header, qcols, q);
  }
  write_fit_report(out_path(cfg, "fit_report.csv"), header, rows);
}

std::vector<GradientCheckRow> gradient_check(const RunConfig& cfg) {
  cfg.validate();
  const auto& gc = cfg.gradient_check;
  std::vector<GradientCheckRow> rows;
  for (int level = 0; level <= gc.refinements; ++level) {
    const int ne = gc.elements << level;
    const double dt = gc.dt / static_cast<double>(1 << level);
    const SplineSpace space = SplineSpace::build(ne, cfg.grid.length);
    ForwardOptions o = forward_options(cfg);
    o.dt = dt;
    o.solver.eps_NL = gc.eps_NL;
    o.solver.eps_L = gc.eps_L;
    o.solver.max_linear_iters = std::max(o.solver.max_linear_iters, 2000);
    const ObjectiveSpec spec = objective_spec(cfg, space);
    const MarchState start = pregrow(space, make_initial_conditions(space, cfg.initial), cfg.model, gc.pregrow, o);
    const int N = step_count(gc.T, dt);
    const double Um = cfg.controls.U_max, Sm = cfg.controls.S_max;
    const auto z = ControlTrajectory::zeros(gc.T, N, Um, Sm);
    const ControlTrajectory c(z.t(), std::vector<double>(z.size(), 0.5 * Um), std::vector<double>(z.size(), 0.5 * Sm),
                              Um, Sm);
    const StateTrajectory fw = solve_forward(space, start, cfg.model, c, gc.T, o);
    const AdjointTrajectory adj = solve_adjoint(space, cfg.model, spec, fw, c, o);
    const Gradient g = reduced_gradient(space, cfg.model, spec, fw, adj, c);

    ForwardOptions oe = o;
    oe.store = false;
    oe.track_bounds = false;
    auto J = [&](const ControlTrajectory& cc) {
      ObjectiveAccumulator acc(space, spec);
      (void)solve_forward(space, start, cfg.model, cc, gc.T, oe, acc.observer());
      return acc.finish(cc).total;
    };

    const ControlDirection smooth = smooth_direction(z.t(), gc.T, Um, Sm, cfg.seed);
    const ControlDirection zero{z.t(), std::vector<double>(z.size(), 0.0), std::vector<double>(z.size(), 0.0)};
    for (const auto& [name, dir] : {std::pair{"smooth", &smooth}, std::pair{"zero", &zero}}) {
      const double ga = directional_derivative(g, *dir);
      const auto tan = solve_tangent(space, cfg.model, fw, c, *dir, o);
      const double gt = directional_derivative(space, spec, fw, tan, c, *dir);
      for (double eps : gc.eps) {
        std::vector<double> Up(z.size()), Sp(z.size()), Un(z.size()), Sn(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
          Up[i] = c.U()[i] + eps * dir->dU[i];
          Un[i] = c.U()[i] - eps * dir->dU[i];
          Sp[i] = c.S()[i] + eps * dir->dS[i];
          Sn[i] = c.S()[i] - eps * dir->dS[i];
        }
        const double Jp = J(ControlTrajectory(z.t(), std::move(Up), std::move(Sp), Um, Sm));
        const double Jn = J(ControlTrajectory(z.t(), std::move(Un), std::move(Sn), Um, Sm));
        const double fd = (Jp - Jn) / (2.0 * eps);
        rows.push_back({level, ne, dt, name, eps, fd, ga, gt, rel_err(ga, fd), rel_err(gt, fd), rel_err(gt, ga)});
      }
    }
  }
  return rows;
}

void cmd_gradient_check(const RunConfig& cfg) {
  ensure_directory(cfg.output.dir);
  const auto rows = gradient_check(cfg);
  const std::string path = out_path(cfg, "gradient_check.csv");
  std::ofstream f(path);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << config_header(cfg, "pcaopt gradient-check");
  f << "level,elements,dt,direction,eps,fd,adjoint,tangent,err_adjoint,err_tangent,tangent_vs_adjoint\n";
  for (const auto& r : rows) {
    f << r.level << "," << r.elements << "," << format_number(r.dt) << "," << r.direction << ","
      << format_number(r.eps) << "," << format_number(r.fd) << "," << format_number(r.adjoint) << ","
      << format_number(r.tangent) << "," << format_number(r.err_adjoint) << "," << format_number(r.err_tangent) << ","
      << format_number(r.tangent_vs_adjoint) << "\n";
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

}  // namespace pcaopt
