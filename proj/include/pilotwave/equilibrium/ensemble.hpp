#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "pilotwave/core/parallel.hpp"
#include "pilotwave/guidance/trajectory.hpp"
#include "pilotwave/weylscale/density.hpp"

namespace pilotwave::equilibrium {

/// Statistical operations expect at least this many members.
inline constexpr std::size_t kMinEnsembleSize = 1000;

/// Ensembles with more than this fraction of unreliable members are degraded.
inline constexpr double kDegradedEnsembleFraction = 0.01;

/// Equally weighted configurations at one time.
struct Ensemble {
  GridSpec grid;
  std::vector<Point> positions;
  double t = 0.0;
  std::string source_tag;
  std::uint64_t seed = 0;
  std::vector<std::uint8_t> flagged;  ///< per member: its last transport was unreliable
  bool error = false;
  bool degraded = false;
  std::vector<std::string> warnings;

  std::size_t size() const { return positions.size(); }
  double weight() const { return positions.empty() ? 0.0 : 1.0 / static_cast<double>(positions.size()); }
  double unreliable_fraction() const {
    if (flagged.empty()) return 0.0;
    const auto bad = std::count(flagged.begin(), flagged.end(), std::uint8_t{1});
    return static_cast<double>(bad) / static_cast<double>(flagged.size());
  }
};

using DensityFunction = std::function<double(const Point&)>;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for member i of a run seeded with `seed`.
inline std::mt19937_64 member_rng(std::uint64_t seed, std::size_t i) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(i)));
}

inline double uniform01(std::mt19937_64& rng) { return std::generate_canonical<double, 64>(rng); }

}  // namespace detail

/// Draws n members from a grid density read as piecewise constant on the
/// node-centred cells [x_k - dx/2, x_k + dx/2). 1D inverts the cumulative
/// distribution; 2D uses rejection against the maximum cell value.
inline Ensemble sample_ensemble(const GridSpec& g, const std::vector<double>& rho, std::size_t n, std::uint64_t seed,
                                double t = 0.0, std::string tag = "grid") {
  Ensemble e;
  e.grid = g;
  e.t = t;
  e.seed = seed;
  e.source_tag = std::move(tag);
  if (n == 0) {
    e.error = true;
    e.warnings.push_back("requested an empty ensemble");
    return e;
  }
  if (rho.size() != g.size()) throw ConfigError("density does not match the grid");
  double total = 0.0, peak = 0.0;
  for (double r : rho) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("density must be finite and non-negative");
    total += r;
    peak = std::max(peak, r);
  }
  if (!(total > 0.0)) throw ConfigError("density has no mass");
  const double norm = total * g.cell_volume();
  if (std::abs(norm - 1.0) > 1e-3) e.warnings.push_back("density norm " + std::to_string(norm) + " renormalized");
  if (n < kMinEnsembleSize) e.warnings.push_back("fewer than 1000 members: statistics are not reliable");

  e.positions.resize(n);
  e.flagged.assign(n, 0);
  if (g.dim() == 1) {
    std::vector<double> cdf(rho.size());
    std::partial_sum(rho.begin(), rho.end(), cdf.begin());
    const double dx = g.spacing(0);
    parallel_for(n, [&](std::size_t i) {
      auto rng = detail::member_rng(seed, i);
      const double u = detail::uniform01(rng) * total;
      auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      const auto k = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
      const double below = k == 0 ? 0.0 : cdf[k - 1];
      const double frac = rho[k] > 0.0 ? std::clamp((u - below) / rho[k], 0.0, 1.0) : 0.5;
      e.positions[i] = g.wrap(Point{g.coord(0, k) + (frac - 0.5) * dx, 0.0});
    });
  } else {
    const std::size_t ny = g.points(1);
    const double dx = g.spacing(0), dy = g.spacing(1);
    parallel_for(n, [&](std::size_t i) {
      auto rng = detail::member_rng(seed, i);
      for (;;) {
        const double x = g.lower(0) + detail::uniform01(rng) * g.length(0);
        const double y = g.lower(1) + detail::uniform01(rng) * g.length(1);
        // nearest node in periodic sense
        auto ix = static_cast<std::size_t>(std::floor((x - g.lower(0)) / dx + 0.5)) % g.points(0);
        auto iy = static_cast<std::size_t>(std::floor((y - g.lower(1)) / dy + 0.5)) % ny;
        if (detail::uniform01(rng) * peak < rho[ix * ny + iy]) {
          e.positions[i] = Point{x, y};
          break;
        }
      }
    });
  }
  return e;
}

inline Ensemble sample_ensemble(const weylscale::DensitySnapshot& s, std::size_t n, std::uint64_t seed) {
  return sample_ensemble(s.grid, s.rho, n, seed, s.t,
                         std::string("conserved density (") + weylscale::to_string(s.method) + ")");
}

/// Closed-form density evaluated on the nodes of g.
inline Ensemble sample_ensemble(const GridSpec& g, const DensityFunction& rho, std::size_t n, std::uint64_t seed,
                                double t = 0.0, std::string tag = "closed form") {
  std::vector<double> v(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) v[k] = rho(g.node(k));
  return sample_ensemble(g, v, n, seed, t, std::move(tag));
}

/// Moves every member along the flow from ensemble.t to t1.
template <class Flow>
Ensemble evolve_ensemble(const Ensemble& ens, const Flow& flow, double t1, const guidance::IntegratorOptions& opt = {}) {
  Ensemble out = ens;
  out.t = t1;
  out.flagged.assign(ens.size(), 0);
  if (t1 == ens.t || ens.positions.empty()) {
    out.degraded = false;
    return out;
  }
  if (ens.t < flow.t0() - 1e-9 || t1 > flow.t_end() + 1e-9 || ens.t > flow.t_end() + 1e-9 || t1 < flow.t0() - 1e-9)
    throw ConfigError("velocity timeline does not cover the requested interval");
  parallel_for(ens.size(), [&](std::size_t i) {
    const auto end = guidance::forward_endpoint(flow, ens.positions[i], ens.t, t1, opt);
    out.positions[i] = end.q;
    out.flagged[i] = end.unreliable() ? 1 : 0;
  });
  out.degraded = out.unreliable_fraction() > kDegradedEnsembleFraction;
  return out;
}

}  // namespace pilotwave::equilibrium
