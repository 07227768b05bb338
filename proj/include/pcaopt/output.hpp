// CSV, text, VTK and binary writers. Every file starts with '#' lines
// holding the resolved configuration.
#pragma once

#include "pcaopt/config.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace pcaopt {

/// "# <title>" followed by the serialized config, one "# " line each.
[[nodiscard]] std::string config_header(const RunConfig& cfg, const std::string& title);

/// Shortest decimal form that round-trips through strtod.
[[nodiscard]] std::string format_number(double v);

/// Writes header lines, a column line and rows; IoError on failure.
void write_csv(const std::string& path, const std::string& header, const std::vector<std::string>& columns,
               const std::vector<std::vector<double>>& rows);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;     // NaN in text columns
  std::map<std::string, std::vector<std::string>> text;
  [[nodiscard]] std::vector<double> column(const std::string& name) const;
};

/// Skips '#' lines; IoError if missing, ConfigError if malformed. Cells of
/// `text_columns` are kept verbatim.
[[nodiscard]] CsvTable read_csv(const std::string& path, const std::vector<std::string>& text_columns = {});

void write_qoi_csv(const std::string& path, const std::string& header, const std::vector<QoiRow>& rows);
void write_controls_csv(const std::string& path, const std::string& header, const ControlTrajectory& c);
void write_iteration_log(const std::string& path, const std::string& header, const std::vector<IterationLog>& log);
void write_kkt_report(const std::string& path, const std::string& header, const KktReport& r, double U_max,
                      double S_max);

struct ProtocolEvaluation {
  FitResult fit;
  GoodnessOfFit volume;  // against the optimal run
  GoodnessOfFit psa;
  bool simulated = false;
};

/// Tables 3-4 layout: parameters then R^2 / RMSE of effect, volume and PSA.
void write_fit_report(const std::string& path, const std::string& header,
                      const std::vector<ProtocolEvaluation>& rows);

/// Field values on an n x n uniform lattice over [0, L]^2, x fastest.
[[nodiscard]] std::vector<double> sample_lattice(const SplineSpace& space, const Vec& c, int n);

struct Snapshot {
  double t = 0.0;
  int n = 0;  // lattice points per side
  double L = 0.0;
  std::vector<double> phi, sigma, p;
};

[[nodiscard]] Snapshot make_snapshot(const SplineSpace& space, const Vec& Y, double t, int n);

/// Legacy VTK structured points with three point-data scalars; `header`
/// is stored as a byte field array.
void write_vtk(const std::string& path, const std::string& header, const Snapshot& s);
/// Raw little-endian float64 arrays phi, sigma, p in `path`.bin and a JSON
/// header `path`.json with dimensions, side length, time and field order.
void write_binary(const std::string& path_stem, const RunConfig& cfg, const Snapshot& s);

using Segment = std::array<double, 4>;  // x0, y0, x1, y1

/// Marching-squares segments of the `level` isoline of lattice values.
[[nodiscard]] std::vector<Segment> isoline(const std::vector<double>& values, int n, double L, double level);
void write_contour_csv(const std::string& path, const std::string& header, const std::vector<Segment>& segs);

/// Creates a directory tree; IoError on failure.
void ensure_directory(const std::string& dir);

}  // namespace pcaopt
