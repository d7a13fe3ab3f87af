#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pilotwave/core/errors.hpp"
#include "pilotwave/core/fields.hpp"

namespace pilotwave::dynamics {

/// States stored every `stride` steps of size dt, plus the Born norm after
/// every step (norms[0] belongs to the initial state).
template <class State>
struct Timeline {
  double t0 = 0.0;
  double dt = 0.0;
  long n_steps = 0;
  long stride = 1;
  std::vector<State> snapshots;
  std::vector<double> norms;

  double snapshot_dt() const { return dt * static_cast<double>(stride); }
  double t_end() const { return t0 + dt * static_cast<double>(n_steps); }
  double snapshot_time(std::size_t i) const { return t0 + snapshot_dt() * static_cast<double>(i); }
  const GridSpec& grid() const { return snapshots.front().grid; }

  /// Index of a snapshot at time t (which must lie on the snapshot lattice).
  std::size_t index_at(double t) const {
    const double u = (t - t0) / snapshot_dt();
    const double r = std::round(u);
    if (std::abs(u - r) > 1e-6 || r < 0.0 || r > static_cast<double>(snapshots.size() - 1))
      throw ConfigError("time " + std::to_string(t) + " is not a stored snapshot");
    return static_cast<std::size_t>(r);
  }
  const State& at(double t) const { return snapshots[index_at(t)]; }

  /// Snapshot interval containing t: returns (i, w) with t = (1 - w) t_i + w t_{i+1}.
  std::pair<std::size_t, double> bracket(double t) const {
    const double tol = 1e-9 * snapshot_dt();
    if (t < t0 - tol || t > t_end() + tol)
      throw ConfigError("time " + std::to_string(t) + " lies outside the timeline");
    if (snapshots.size() == 1) return {0, 0.0};
    double u = (t - t0) / snapshot_dt();
    u = std::clamp(u, 0.0, static_cast<double>(snapshots.size() - 1));
    std::size_t i = static_cast<std::size_t>(std::floor(u));
    if (i >= snapshots.size() - 1) i = snapshots.size() - 2;
    return {i, u - static_cast<double>(i)};
  }
};

/// Steps `initial` n_steps times, keeping every stride-th state.
/// Any non-finite amplitude aborts with the offending step number.
template <class Stepper, class State>
Timeline<State> propagate(const State& initial, const Stepper& stepper, double dt, long n_steps,
                          long stride = 1) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (n_steps < 0) throw ConfigError("n_steps must be non-negative");
  if (stride < 1) throw ConfigError("snapshot stride must be at least 1");
  if (n_steps % stride != 0) throw ConfigError("n_steps must be a multiple of the snapshot stride");
  Timeline<State> tl;
  tl.t0 = initial.time;
  tl.dt = dt;
  tl.n_steps = n_steps;
  tl.stride = stride;
  tl.snapshots.reserve(static_cast<std::size_t>(n_steps / stride + 1));
  tl.snapshots.push_back(initial);
  tl.norms.reserve(static_cast<std::size_t>(n_steps + 1));
  tl.norms.push_back(born_norm(initial));
  State psi = initial;
  for (long s = 1; s <= n_steps; ++s) {
    try {
      psi = stepper.step(psi, dt);
    } catch (const DivergenceError& e) {
      // steppers do not know the step count
      const std::string what = e.what();
      const auto colon = what.find("): ");
      throw DivergenceError(s, tl.t0 + dt * static_cast<double>(s - 1),
                            colon == std::string::npos ? what : what.substr(colon + 3));
    }
    psi.time = tl.t0 + dt * static_cast<double>(s);
    const double nrm = born_norm(psi);
    if (!std::isfinite(nrm) || !all_finite(psi))
      throw DivergenceError(s, psi.time, "non-finite amplitude");
    tl.norms.push_back(nrm);
    if (s % stride == 0) tl.snapshots.push_back(psi);
  }
  return tl;
}

}  // namespace pilotwave::dynamics
