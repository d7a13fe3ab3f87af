#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pilotwave/guidance/run.hpp"
#include "pilotwave/weylscale/density.hpp"

namespace pilotwave::equilibrium {

/// Default multiple of the run's speed scale at which eps / R^2 is clipped.
inline constexpr double kModifiedVelocityCap = 10.0;

/// Masked-node contamination above this fraction degrades a uniqueness report.
inline constexpr double kContaminationLimit = 0.05;

namespace detail {

inline void require_modifiable(const SystemModel& m) {
  if (m.kind != SystemKind::Schrodinger1D)
    throw UnsupportedError("the modified velocity is only available for one particle on a line");
  if (!m.gauge.a_source(0).is_zero())
    throw UnsupportedError("the modified velocity is only available with A = 0");
}

}  // namespace detail

/// v + eps / R^2, which keeps d/dx (R^2 v') = 0 for A = 0 in 1D. The added
/// part is clipped to `cap` where it exceeds it (near nodes of R, in the far
/// tails); clipped nodes are marked masked so trajectories crossing them are flagged.
inline guidance::VelocityField modified_velocity_field(const guidance::VelocityField& v, const ComplexScalarField& psi,
                                                       const SystemModel& m, double eps, double cap) {
  detail::require_modifiable(m);
  if (eps == 0.0) return v;
  if (!(psi.grid == v.grid)) throw ConfigError("state and velocity field live on different grids");
  if (!(cap > 0.0)) throw ConfigError("velocity cap must be positive");
  guidance::VelocityField out = v;
  const auto r2 = born_density(psi);
  double mx = 0.0;
  for (std::size_t k = 0; k < r2.size(); ++k) {
    const double add = r2[k] > 0.0 ? eps / r2[k] : std::copysign(cap, eps);
    if (!(std::abs(add) <= cap)) {
      out.v[0][k] = v.v[0][k] + std::copysign(cap, eps);
      out.masked[k] = 1;
      continue;
    }
    out.v[0][k] = v.v[0][k] + add;
    if (!out.masked[k]) mx = std::max(mx, std::abs(out.v[0][k]));
  }
  out.max_unmasked_speed = mx;
  return out;
}

/// Cap for the added velocity over a whole run: `multiplier` times the larger
/// of the fastest unmasked original node and |eps| / max R^2, over all snapshots.
inline double modified_velocity_cap(const guidance::PilotRun<ComplexScalarField>& run, double eps,
                                    double multiplier = kModifiedVelocityCap) {
  double scale = 0.0;
  for (std::size_t i = 0; i < run.flow.size(); ++i) {
    const auto r2 = born_density(run.timeline.snapshots[i]);
    const double peak = *std::max_element(r2.begin(), r2.end());
    scale = std::max({scale, run.flow.field(i).max_unmasked_speed, peak > 0.0 ? std::abs(eps) / peak : 0.0});
  }
  return multiplier * scale;
}

/// Same run with every stored velocity field replaced by its modified counterpart.
inline guidance::PilotRun<ComplexScalarField> modified_run(const guidance::PilotRun<ComplexScalarField>& run,
                                                           double eps,
                                                           double cap_multiplier = kModifiedVelocityCap) {
  detail::require_modifiable(run.model);
  if (eps == 0.0) return run;
  const auto& tl = run.timeline;
  const double cap = modified_velocity_cap(run, eps, cap_multiplier);
  std::vector<guidance::VelocityField> fields(tl.snapshots.size());
  parallel_for(fields.size(), [&](std::size_t i) {
    fields[i] = modified_velocity_field(run.flow.field(i), tl.snapshots[i], run.model, eps, cap);
  });
  guidance::VelocityTimeline flow(std::move(fields), tl.t0, tl.snapshot_dt(), run.model);
  return guidance::PilotRun<ComplexScalarField>(run.model, tl, std::move(flow));
}

struct UniquenessReport {
  double epsilon = 0.0;
  double t = 0.0;
  weylscale::DensitySnapshot original;  ///< |psi|^2 / one^2 along the unmodified trajectories
  weylscale::DensitySnapshot modified;  ///< the same ratio along the modified trajectories
  std::vector<guidance::Trajectory> original_paths;
  std::vector<guidance::Trajectory> modified_paths;
  double l1_distance = 0.0;
  double norm_original = 0.0;
  double norm_modified = 0.0;
  double contamination = 0.0;  ///< mass fraction of the modified density on flagged or masked nodes
  bool degraded = false;

  double drift_original() const { return std::abs(norm_original - 1.0); }
  double drift_modified() const { return std::abs(norm_modified - 1.0); }
};

/// Compares the pilot-wave equilibrium density reconstructed along the
/// original trajectories with the one along the eps-modified trajectories.
/// `seeds` are traced under both flows from t0 to t for the trajectory datasets.
inline UniquenessReport uniqueness_experiment(const guidance::PilotRun<ComplexScalarField>& run, double eps, double t,
                                              const std::vector<Point>& seeds = {},
                                              const guidance::IntegratorOptions& opt = {},
                                              double cap_multiplier = kModifiedVelocityCap) {
  const auto mod = modified_run(run, eps, cap_multiplier);
  UniquenessReport r;
  r.epsilon = eps;
  r.t = t;
  r.original = weylscale::conserved_density_grid(run, t, weylscale::DensityMethod::Backward, opt);
  r.modified = weylscale::conserved_density_grid(mod, t, weylscale::DensityMethod::Backward, opt);
  const GridSpec& g = r.original.grid;
  r.norm_original = weylscale::total_norm(r.original);
  r.norm_modified = weylscale::total_norm(r.modified);
  double l1 = 0.0, bad = 0.0;
  const auto& fm = mod.flow.field(run.timeline.index_at(t));
  for (std::size_t k = 0; k < g.size(); ++k) {
    l1 += std::abs(r.original.rho[k] - r.modified.rho[k]);
    if (r.modified.flagged[k] || fm.masked[k]) bad += r.modified.rho[k];
  }
  r.l1_distance = l1 * g.cell_volume();
  r.contamination = r.norm_modified > 0.0 ? bad * g.cell_volume() / r.norm_modified : 1.0;
  r.degraded = r.contamination > kContaminationLimit || r.original.degraded;
  r.original_paths.resize(seeds.size());
  r.modified_paths.resize(seeds.size());
  const double t0 = run.timeline.t0;
  parallel_for(seeds.size(), [&](std::size_t i) {
    r.original_paths[i] = guidance::integrate_trajectory(run.flow, seeds[i], t0, t, opt);
    r.modified_paths[i] = guidance::integrate_trajectory(mod.flow, seeds[i], t0, t, opt);
  });
  return r;
}

}  // namespace pilotwave::equilibrium
