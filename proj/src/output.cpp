#include "pcaopt/output.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace pcaopt {

std::string config_header(const RunConfig& cfg, const std::string& title) {
  std::ostringstream os;
  os << "# " << title << "\n";
  std::istringstream in(serialize_config(cfg));
  std::string line;
  while (std::getline(in, line)) os << "# " << line << "\n";
  return os.str();
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path + "'");
  return f;
}

void finish(std::ofstream& f, const std::string& path) {
  f.flush();
  if (!f) throw IoError("write failed for '" + path + "'");
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

}  // namespace

void write_csv(const std::string& path, const std::string& header, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows) {
  auto f = open_out(path);
  f << header << join(columns) << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) f << (i ? "," : "") << format_number(r[i]);
    f << "\n";
  }
  finish(f, path);
}

std::vector<double> CsvTable::column(const std::string& name) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] == name) {
      std::vector<double> v;
      v.reserve(rows.size());
      for (const auto& r : rows) v.push_back(r[j]);
      return v;
    }
  }
  throw ConfigError("CSV has no column '" + name + "'");
}

CsvTable read_csv(const std::string& path, const std::vector<std::string>& text_columns) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read '" + path + "'");
  CsvTable t;
  std::vector<bool> is_text;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (t.columns.empty()) {
      t.columns = cells;
      for (const auto& c : t.columns) {
        is_text.push_back(std::find(text_columns.begin(), text_columns.end(), c) != text_columns.end());
        if (is_text.back()) t.text[c];
      }
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) + " fields");
    }
    std::vector<double> row;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto& c = cells[k];
      if (is_text[k]) {
        t.text[t.columns[k]].push_back(c);
        row.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0.0;
      const auto r = std::from_chars(c.data(), c.data() + c.size(), v);
      if (r.ec != std::errc() || r.ptr != c.data() + c.size()) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": not a number '" + c + "'");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty()) throw ConfigError(path + ": no column line");
  return t;
}

void write_qoi_csv(const std::string& path, const std::string& header, const std::vector<QoiRow>& rows) {
  std::vector<std::vector<double>> r;
  r.reserve(rows.size());
  for (const auto& q : rows) r.push_back({q.t, q.v_phi, q.P_s});
  write_csv(path, header, {"t", "v_phi", "P_s"}, r);
}

void write_controls_csv(const std::string& path, const std::string& header, const ControlTrajectory& c) {
  std::vector<std::vector<double>> r;
  for (std::size_t i = 0; i < c.size(); ++i) r.push_back({c.t()[i], c.U()[i], c.S()[i]});
  write_csv(path, header, {"t", "U", "S"}, r);
}

void write_iteration_log(const std::string& path, const std::string& header, const std::vector<IterationLog>& log) {
  auto f = open_out(path);
  f << header << "iter,J";
  for (int i = 1; i <= 7; ++i) f << ",J_k" << i;
  f << ",norm_dU,norm_dS,mu_star,criterion\n";
  for (const auto& l : log) {
    f << l.iter << "," << format_number(l.J.total);
    for (double v : l.J.terms) f << "," << format_number(v);
    f << "," << format_number(l.norm_dU) << "," << format_number(l.norm_dS) << "," << format_number(l.mu_star) << ","
      << to_string(l.criterion) << "\n";
  }
  finish(f, path);
}

void write_kkt_report(const std::string& path, const std::string& header, const KktReport& r, double U_max,
                      double S_max) {
  auto f = open_out(path);
  f << header;
  f << "control  regime    max_violation\n";
  f << "U        interior  " << format_number(r.U_interior) << "\n";
  f << "U        lower     " << format_number(r.U_lower) << "\n";
  f << "U        upper     " << format_number(r.U_upper) << "\n";
  f << "S        interior  " << format_number(r.S_interior) << "\n";
  f << "S        lower     " << format_number(r.S_lower) << "\n";
  f << "S        upper     " << format_number(r.S_upper) << "\n";
  f << "U active samples: " << r.U_active << "\n";
  f << "S active samples: " << r.S_active << "\n";
  f << "U projection residual: " << format_number(r.U_residual) << " (" << format_number(r.U_residual / U_max)
    << " of U_max)\n";
  f << "S projection residual: " << format_number(r.S_residual) << " (" << format_number(r.S_residual / S_max)
    << " of S_max)\n";
  finish(f, path);
}

void write_fit_report(const std::string& path, const std::string& header,
                      const std::vector<ProtocolEvaluation>& rows) {
  auto f = open_out(path);
  f << header
    << "protocol,d1,d2,d3,t2,t3,tau,R2_effect,RMSE_effect,R2_volume,RMSE_volume,R2_psa,RMSE_psa,cost,converged\n";
  auto r2 = [](const GoodnessOfFit& g) { return g.r2_defined ? format_number(g.r2) : std::string("undefined"); };
  for (const auto& e : rows) {
    const auto& p = e.fit.protocol;
    f << to_string(e.fit.tmpl);
    for (std::size_t i = 0; i < 3; ++i) f << "," << (i < p.doses.size() ? format_number(p.doses[i]) : "-");
    for (std::size_t i = 1; i < 3; ++i) {
      f << "," << (i < p.delivery_times.size() ? format_number(p.delivery_times[i]) : "-");
    }
    f << "," << (free_tau(e.fit.tmpl) ? format_number(p.tau) : "-");
    f << "," << r2(e.fit.gof) << "," << format_number(e.fit.gof.rmse);
    if (e.simulated) {
      f << "," << r2(e.volume) << "," << format_number(e.volume.rmse) << "," << r2(e.psa) << ","
        << format_number(e.psa.rmse);
    } else {
      f << ",-,-,-,-";
    }
    f << "," << format_number(e.fit.cost) << "," << (e.fit.converged ? 1 : 0) << "\n";
  }
  finish(f, path);
}

std::vector<double> sample_lattice(const SplineSpace& space, const Vec& c, int n) {
  std::vector<double> v(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  const double L = space.side_length();
  for (int j = 0; j < n; ++j) {
    const double y = L * j / (n - 1);
    for (int i = 0; i < n; ++i) {
      v[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] =
          space.evaluate(c, L * i / (n - 1), y);
    }
  }
  return v;
}

Snapshot make_snapshot(const SplineSpace& space, const Vec& Y, double t, int n) {
  const int nb = space.num_basis();
  Snapshot s;
  s.t = t;
  s.n = n;
  s.L = space.side_length();
  s.phi = sample_lattice(space, Y.segment(0, nb), n);
  s.sigma = sample_lattice(space, Y.segment(nb, nb), n);
  s.p = sample_lattice(space, Y.segment(2 * nb, nb), n);
  return s;
}

void write_vtk(const std::string& path, const std::string& header, const Snapshot& s) {
  auto f = open_out(path);
  f << "# vtk DataFile Version 3.0\n";
  f << "pcaopt snapshot t=" << format_number(s.t) << "\n";
  f << "ASCII\nDATASET STRUCTURED_POINTS\n";
  f << "DIMENSIONS " << s.n << " " << s.n << " 1\n";
  f << "ORIGIN 0 0 0\n";
  const double h = s.L / (s.n - 1);
  f << "SPACING " << format_number(h) << " " << format_number(h) << " 1\n";
  // the config header travels as a byte array
  f << "FIELD FieldData 1\nconfig 1 " << header.size() << " unsigned_char\n";
  for (std::size_t i = 0; i < header.size(); ++i) {
    f << static_cast<int>(static_cast<unsigned char>(header[i])) << ((i + 1) % 32 == 0 ? "\n" : " ");
  }
  f << "\n";
  f << "POINT_DATA " << s.n * s.n << "\n";
  const std::pair<const char*, const std::vector<double>*> fields[] = {{"phi", &s.phi}, {"sigma", &s.sigma}, {"p", &s.p}};
  for (const auto& [name, vals] : fields) {
    f << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : *vals) f << format_number(v) << "\n";
  }
  finish(f, path);
}

void write_binary(const std::string& path_stem, const RunConfig& cfg, const Snapshot& s) {
  const std::string bin = path_stem + ".bin";
  {
    auto f = open_out(bin);
    for (const auto* vals : {&s.phi, &s.sigma, &s.p}) {
      for (double v : *vals) {
        std::uint64_t u;
        std::memcpy(&u, &v, sizeof u);
        unsigned char b[8];
        for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(u >> (8 * k));
        f.write(reinterpret_cast<const char*>(b), 8);
      }
    }
    finish(f, bin);
  }
  nlohmann::ordered_json h;
  h["nx"] = s.n;
  h["ny"] = s.n;
  h["L"] = s.L;
  h["t"] = s.t;
  h["fields"] = {"phi", "sigma", "p"};
  h["dtype"] = "float64-le";
  h["layout"] = "x fastest, field-major";
  h["data"] = std::filesystem::path(bin).filename().string();
  h["config"] = serialize_config(cfg);
  const std::string js = path_stem + ".json";
  auto f = open_out(js);
  f << h.dump(2) << "\n";
  finish(f, js);
}

std::vector<Segment> isoline(const std::vector<double>& v, int n, double L, double level) {
  std::vector<Segment> out;
  const double h = L / (n - 1);
  auto at = [&](int i, int j) { return v[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)]; };
  auto lerp = [&](double x0, double y0, double f0, double x1, double y1, double f1) {
    const double w = (level - f0) / (f1 - f0);
    return std::array<double, 2>{x0 + w * (x1 - x0), y0 + w * (y1 - y0)};
  };
  for (int j = 0; j + 1 < n; ++j) {
    for (int i = 0; i + 1 < n; ++i) {
      const double x0 = i * h, x1 = (i + 1) * h, y0 = j * h, y1 = (j + 1) * h;
      const double f00 = at(i, j), f10 = at(i + 1, j), f11 = at(i + 1, j + 1), f01 = at(i, j + 1);
      const int code = (f00 >= level ? 1 : 0) | (f10 >= level ? 2 : 0) | (f11 >= level ? 4 : 0) | (f01 >= level ? 8 : 0);
      if (code == 0 || code == 15) continue;
      // edge crossings: bottom, right, top, left
      std::array<double, 2> e[4];
      bool has[4] = {(code & 1) != ((code >> 1) & 1), ((code >> 1) & 1) != ((code >> 2) & 1),
                     ((code >> 2) & 1) != ((code >> 3) & 1), ((code >> 3) & 1) != (code & 1)};
      if (has[0]) e[0] = lerp(x0, y0, f00, x1, y0, f10);
      if (has[1]) e[1] = lerp(x1, y0, f10, x1, y1, f11);
      if (has[2]) e[2] = lerp(x1, y1, f11, x0, y1, f01);
      if (has[3]) e[3] = lerp(x0, y1, f01, x0, y0, f00);
      auto seg = [&](int a, int b) { out.push_back({e[a][0], e[a][1], e[b][0], e[b][1]}); };
      if (code == 5 || code == 10) {
        const bool center_in = 0.25 * (f00 + f10 + f11 + f01) >= level;
        if ((code == 5) == center_in) {
          seg(0, 1);
          seg(2, 3);
        } else {
          seg(0, 3);
          seg(1, 2);
        }
        continue;
      }
      int idx[2], k = 0;
      for (int q = 0; q < 4; ++q) {
        if (has[q]) idx[k++] = q;
      }
      seg(idx[0], idx[1]);
    }
  }
  return out;
}

void write_contour_csv(const std::string& path, const std::string& header, const std::vector<Segment>& segs) {
  std::vector<std::vector<double>> rows;
  rows.reserve(segs.size());
  for (const auto& s : segs) rows.push_back({s[0], s[1], s[2], s[3]});
  write_csv(path, header, {"x0", "y0", "x1", "y1"}, rows);
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

}  // namespace pcaopt
