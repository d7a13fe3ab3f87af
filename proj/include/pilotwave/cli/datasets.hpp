#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "pilotwave/guidance/trajectory.hpp"
#include "pilotwave/weylscale/density.hpp"

#ifndef PILOTWAVE_VERSION_STRING
#define PILOTWAVE_VERSION_STRING "0.0.0"
#endif

namespace pilotwave::cli {

inline constexpr const char* kLibraryVersion = PILOTWAVE_VERSION_STRING;

/// Shortest text that round-trips a double (17 significant digits).
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Column names and metadata of a CSV dataset.
struct CsvSchema {
  std::string name;
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;

  /// '#'-prefixed metadata lines followed by the header row.
  std::string header() const {
    std::string s = "# dataset: " + name + "\n# library: pilotwave " + kLibraryVersion + "\n";
    for (const auto& [k, v] : metadata) s += "# " + k + ": " + v + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
    return s + "\n";
  }
};

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const CsvSchema& schema)
      : out_(path, std::ios::binary), width_(schema.columns.size()) {
    if (!out_) throw ConfigError("cannot write " + path.string());
    out_ << schema.header();
  }

  void row(std::initializer_list<double> values) { row(std::vector<double>(values)); }

  void row(const std::vector<double>& values) {
    if (values.size() != width_) throw std::logic_error("csv row width does not match the header");
    std::string line;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) line += ',';
      line += format_number(values[i]);
    }
    line += '\n';
    out_ << line;
  }

  void close() {
    out_.close();
    if (!out_) throw ConfigError("failed writing dataset");
  }

 private:
  std::ofstream out_;
  std::size_t width_;
};

/// Schemas of the three figure datasets.
inline CsvSchema trajectories_schema(std::vector<std::pair<std::string, std::string>> meta = {}) {
  meta.emplace_back("units", "hbar = c = 1; x is wrapped into the grid, x_unwrapped is the continuous path");
  meta.emplace_back("flagged", "1 if the step touched a masked node (|psi|^2 below the node threshold)");
  return {"trajectories", std::move(meta), {"seed", "t", "x", "x_unwrapped", "ln_one", "flagged"}};
}

inline CsvSchema scale_factor_schema(std::vector<std::pair<std::string, std::string>> meta = {}) {
  meta.emplace_back("one_sq", "exp(2 ln one) along the trajectory through (x, t), linear scale");
  meta.emplace_back("reconstruction", "backward");
  return {"scale_factor", std::move(meta), {"x", "t", "one_sq"}};
}

inline CsvSchema densities_schema(std::vector<std::pair<std::string, std::string>> meta = {}) {
  meta.emplace_back("born", "|psi|^2");
  meta.emplace_back("conserved", "|psi|^2 / one^2, linear scale");
  meta.emplace_back("reconstruction", "backward");
  return {"densities", std::move(meta), {"x", "t", "born", "conserved"}};
}

/// Trajectory samples that fall on the snapshot lattice, one block per seed.
inline void write_trajectories(const std::filesystem::path& path, const std::vector<Point>& seeds,
                               const std::vector<guidance::Trajectory>& paths, double t0, double snapshot_dt,
                               const CsvSchema& schema) {
  CsvWriter w(path, schema);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (const auto& s : paths[i].samples) {
      const double u = (s.t - t0) / snapshot_dt;
      if (std::abs(u - std::round(u)) > 1e-6) continue;
      w.row({seeds[i][0], s.t, s.q[0], s.q_unwrapped[0], s.ln_one, s.flagged ? 1.0 : 0.0});
    }
  }
  w.close();
}

inline void write_scale_factor(const std::filesystem::path& path, const std::vector<weylscale::DensitySnapshot>& snaps,
                               const CsvSchema& schema) {
  CsvWriter w(path, schema);
  for (const auto& s : snaps)
    for (std::size_t k = 0; k < s.grid.size(); ++k) w.row({s.grid.coord(0, k), s.t, std::exp(2.0 * s.ln_one[k])});
  w.close();
}

inline void write_densities(const std::filesystem::path& path, const std::vector<weylscale::DensitySnapshot>& snaps,
                            const CsvSchema& schema) {
  CsvWriter w(path, schema);
  for (const auto& s : snaps)
    for (std::size_t k = 0; k < s.grid.size(); ++k) w.row({s.grid.coord(0, k), s.t, s.born[k], s.rho[k]});
  w.close();
}

}  // namespace pilotwave::cli
