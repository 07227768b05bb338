#include "pcaopt/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

namespace pcaopt {

namespace {

using Slot = std::variant<double*, int*, unsigned*, bool*, std::string*, std::vector<double>*, std::optional<double>*>;

struct Field {
  const char* key;
  Slot slot;
};

struct Section {
  const char* key;  // nullptr for top-level scalars
  std::vector<Field> fields;
};

std::vector<Section> layout(RunConfig& c) {
  auto& m = c.model;
  auto& d = c.controls;
  return {
      {"grid", {{"elements", &c.grid.elements}, {"length", &c.grid.length}}},
      {"time", {{"dt", &c.time.dt}, {"T", &c.time.T}, {"pregrow", &c.time.pregrow}}},
      {"model",
       {{"lambda", &m.lambda}, {"M", &m.M}, {"m_ref", &m.m_ref}, {"K_rho", &m.K_rho}, {"Kbar_rho", &m.Kbar_rho},
        {"K_A", &m.K_A}, {"Kbar_A", &m.Kbar_A}, {"sigma_l", &m.sigma_l}, {"sigma_r", &m.sigma_r}, {"eta", &m.eta},
        {"S_h", &m.S_h}, {"S_c", &m.S_c}, {"gamma_h", &m.gamma_h}, {"gamma_c", &m.gamma_c}, {"D", &m.D},
        {"alpha_h", &m.alpha_h}, {"alpha_c", &m.alpha_c}, {"gamma_p", &m.gamma_p}}},
      {"initial",
       {{"a", &c.initial.a}, {"b", &c.initial.b}, {"sharpness", &c.initial.sharpness},
        {"c0_sigma", &c.initial.c0_sigma}, {"c1_sigma", &c.initial.c1_sigma}, {"c0_p", &c.initial.c0_p},
        {"c1_p", &c.initial.c1_p}, {"no_tumor", &c.initial.no_tumor}}},
      {"objective",
       {{"variant", &c.objective.variant}, {"k", &c.objective.k}, {"phi_Q", &c.objective.phi_Q},
        {"phi_Omega", &c.objective.phi_Omega}, {"p_Omega", &c.objective.p_Omega},
        {"area_scale", &c.objective.area_scale}}},
      {"controls",
       {{"U_max", &d.U_max}, {"S_max", &d.S_max}, {"initial", &d.initial}, {"docetaxel_doses", &d.docetaxel.doses},
        {"docetaxel_times", &d.docetaxel.times}, {"docetaxel_tau", &d.docetaxel.tau},
        {"docetaxel_beta", &d.docetaxel.beta}, {"bevacizumab_doses", &d.bevacizumab.doses},
        {"bevacizumab_times", &d.bevacizumab.times}, {"bevacizumab_tau", &d.bevacizumab.tau},
        {"bevacizumab_beta", &d.bevacizumab.beta}}},
      {"solver",
       {{"rho_inf", &c.solver.rho_inf}, {"eps_NL", &c.solver.eps_NL}, {"eps_L", &c.solver.eps_L},
        {"max_linear_iters", &c.solver.max_linear_iters}, {"max_newton_iters", &c.solver.max_newton_iters},
        {"assembly", &c.solver.assembly}}},
      {"descent",
       {{"pool_size", &c.descent.pool_size}, {"eps_sd1", &c.descent.eps_sd1}, {"eps_sd2", &c.descent.eps_sd2},
        {"max_iters", &c.descent.max_iters}, {"safeguard_halvings", &c.descent.safeguard_halvings},
        {"parallel_pool", &c.descent.parallel_pool}}},
      {"fit",
       {{"target", &c.fit.target}, {"dose_lo", &c.fit.dose_lo}, {"dose_hi", &c.fit.dose_hi},
        {"time_lo", &c.fit.time_lo}, {"time_hi", &c.fit.time_hi}, {"tau_lo", &c.fit.tau_lo},
        {"tau_hi", &c.fit.tau_hi}, {"tolerance", &c.fit.tolerance}, {"max_iters", &c.fit.max_iters},
        {"simulate", &c.fit.simulate}}},
      {"gradient_check",
       {{"elements", &c.gradient_check.elements}, {"T", &c.gradient_check.T}, {"dt", &c.gradient_check.dt},
        {"pregrow", &c.gradient_check.pregrow}, {"eps", &c.gradient_check.eps},
        {"refinements", &c.gradient_check.refinements}, {"eps_NL", &c.gradient_check.eps_NL},
        {"eps_L", &c.gradient_check.eps_L}}},
      {"output",
       {{"dir", &c.output.dir}, {"snapshot_every", &c.output.snapshot_every}, {"lattice", &c.output.lattice},
        {"vtk", &c.output.vtk}, {"binary", &c.output.binary}, {"volume_scale", &c.output.volume_scale},
        {"psa_scale", &c.output.psa_scale}}},
      {nullptr, {{"threads", &c.threads}, {"seed", &c.seed}}},
  };
}

std::string where(const std::string& source, const YAML::Mark& mark) {
  if (mark.is_null()) return source;
  return source + ":" + std::to_string(mark.line + 1);
}

template <class T>
T scalar_as(const YAML::Node& n, const std::string& source, const std::string& key) {
  if (!n.IsScalar()) throw ConfigError(where(source, n.Mark()) + ": '" + key + "' must be a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(source, n.Mark()) + ": cannot convert '" + n.Scalar() + "' for '" + key + "'");
  }
}

void read_field(const YAML::Node& n, const Slot& slot, const std::string& source, const std::string& key) {
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::vector<double>>) {
          if (!n.IsSequence()) throw ConfigError(where(source, n.Mark()) + ": '" + key + "' must be a list");
          p->clear();
          for (const auto& e : n) p->push_back(scalar_as<double>(e, source, key));
        } else if constexpr (std::is_same_v<T, std::optional<double>>) {
          if (n.IsNull() || (n.IsScalar() && n.Scalar() == "auto")) {
            p->reset();
          } else {
            *p = scalar_as<double>(n, source, key);
          }
        } else if constexpr (std::is_same_v<T, std::string>) {
          *p = n.IsNull() ? std::string() : scalar_as<std::string>(n, source, key);
        } else {
          *p = scalar_as<T>(n, source, key);
        }
      },
      slot);
}

void read_map(const YAML::Node& node, const std::vector<Field>& fields, const std::string& source,
              const std::string& prefix) {
  if (!node.IsMap()) throw ConfigError(where(source, node.Mark()) + ": section '" + prefix + "' must be a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    const Field* f = nullptr;
    for (const auto& cand : fields) {
      if (key == cand.key) f = &cand;
    }
    if (!f) throw ConfigError(where(source, kv.first.Mark()) + ": unknown key '" + prefix + key + "'");
    read_field(kv.second, f->slot, source, prefix + key);
  }
}

std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void emit_field(YAML::Emitter& out, const Field& f) {
  out << YAML::Key << f.key << YAML::Value;
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::vector<double>>) {
          out << YAML::Flow << YAML::BeginSeq;
          for (double v : *p) out << shortest(v);
          out << YAML::EndSeq;
        } else if constexpr (std::is_same_v<T, std::optional<double>>) {
          if (p->has_value()) {
            out << shortest(**p);
          } else {
            out << "auto";
          }
        } else if constexpr (std::is_same_v<T, std::string>) {
          out << YAML::DoubleQuoted << *p;
        } else if constexpr (std::is_same_v<T, double>) {
          out << shortest(*p);
        } else {
          out << *p;
        }
      },
      f.slot);
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(where(source, e.mark) + ": " + e.msg);
  }
  RunConfig c;
  if (root.IsNull()) {
    c.validate();
    return c;
  }
  if (!root.IsMap()) throw ConfigError(where(source, root.Mark()) + ": top level must be a mapping");
  auto sections = layout(c);
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    bool found = false;
    for (const auto& sec : sections) {
      if (sec.key && key == sec.key) {
        read_map(kv.second, sec.fields, source, key + ".");
        found = true;
      } else if (!sec.key) {
        for (const auto& f : sec.fields) {
          if (key == f.key) {
            read_field(kv.second, f.slot, source, key);
            found = true;
          }
        }
      }
    }
    if (!found) throw ConfigError(where(source, kv.first.Mark()) + ": unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string serialize_config(const RunConfig& c) {
  RunConfig copy = c;
  YAML::Emitter out;
  out << YAML::BeginMap;
  for (const auto& sec : layout(copy)) {
    if (sec.key) {
      out << YAML::Key << sec.key << YAML::Value << YAML::BeginMap;
      for (const auto& f : sec.fields) emit_field(out, f);
      out << YAML::EndMap;
    } else {
      for (const auto& f : sec.fields) emit_field(out, f);
    }
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

bool operator==(const RunConfig& a, const RunConfig& b) { return serialize_config(a) == serialize_config(b); }

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (grid.elements < 4) fail("grid.elements must be at least 4");
  if (!(grid.length > 0.0)) fail("grid.length must be positive");
  if (!(time.dt > 0.0) || !(time.T > 0.0) || !(time.pregrow >= 0.0)) fail("time: dt, T must be positive and pregrow non-negative");
  try {
    (void)step_count(time.T, time.dt);
    (void)step_count(time.pregrow, time.dt);
    model.validate();
    initial.validate();
    descent.validate();
    (void)variant_from_string(objective.variant);
    (void)alpha_coeffs(solver.rho_inf);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (objective.k.size() != 7) fail("objective.k must list seven weights k1..k7");
  for (double v : objective.k) {
    if (!(v >= 0.0)) fail("objective weights must be non-negative");
  }
  if (std::all_of(objective.k.begin(), objective.k.end(), [](double v) { return v == 0.0; })) {
    fail("objective weights are all zero");
  }
  if (!(objective.area_scale > 0.0)) fail("objective.area_scale must be positive");
  if (!(controls.U_max > 0.0) || !(controls.S_max > 0.0)) fail("controls: U_max and S_max must be positive");
  if (controls.initial != "standard" && controls.initial != "zero" && controls.initial != "max") {
    fail("controls.initial must be standard, zero or max");
  }
  for (const auto* p : {&controls.docetaxel, &controls.bevacizumab}) {
    if (p->doses.size() != p->times.size() || p->doses.empty()) fail("controls: protocol doses and times must match");
    if (!(p->tau > 0.0) || !(p->beta > 0.0)) fail("controls: protocol tau and beta must be positive");
  }
  if (!(solver.eps_NL > 0.0) || !(solver.eps_L > 0.0)) fail("solver tolerances must be positive");
  if (solver.max_linear_iters < 1 || solver.max_newton_iters < 1) fail("solver iteration limits must be at least 1");
  if (solver.assembly != "colored" && solver.assembly != "serial") fail("solver.assembly must be colored or serial");
  if (!(fit.dose_lo <= fit.dose_hi) || !(fit.time_lo <= fit.time_hi) || !(fit.tau_lo <= fit.tau_hi) ||
      !(fit.tau_lo > 0.0)) {
    fail("fit bounds are inconsistent");
  }
  if (fit.max_iters < 1 || !(fit.tolerance > 0.0)) fail("fit solver settings are invalid");
  if (gradient_check.elements < 4 || !(gradient_check.dt > 0.0) || !(gradient_check.T > 0.0) ||
      gradient_check.refinements < 0 || gradient_check.eps.empty()) {
    fail("gradient_check settings are invalid");
  }
  for (double e : gradient_check.eps) {
    if (!(e > 0.0)) fail("gradient_check.eps values must be positive");
  }
  if (output.snapshot_every < 0 || output.lattice < 0 || output.lattice == 1) fail("output cadence or lattice invalid");
  if (!(output.volume_scale > 0.0) || !(output.psa_scale > 0.0)) fail("output scales must be positive");
  if (threads < 0) fail("threads must be non-negative");
}

}  // namespace pcaopt
