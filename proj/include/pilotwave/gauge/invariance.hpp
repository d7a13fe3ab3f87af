#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pilotwave/gauge/transform.hpp"
#include "pilotwave/guidance/run.hpp"
#include "pilotwave/weylscale/density.hpp"
#include "pilotwave/weylscale/residuals.hpp"

namespace pilotwave::gauge {

/// L-infinity deviation between two gauges over nodes unmasked in both.
struct InvarianceReport {
  double max_deviation = 0.0;
  std::size_t compared = 0;
  std::size_t mask_mismatch = 0;  ///< nodes masked in exactly one gauge
  bool degraded = false;
};

namespace detail {

inline InvarianceReport compare(const std::vector<double>& a, const std::vector<double>& b,
                                const std::vector<std::uint8_t>& ma, const std::vector<std::uint8_t>& mb) {
  InvarianceReport r;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (ma[k] != mb[k]) ++r.mask_mismatch;
    if (ma[k] || mb[k]) continue;
    ++r.compared;
    r.max_deviation = std::max(r.max_deviation, std::abs(a[k] - b[k]));
  }
  return r;
}

inline double periodic_gap(const GridSpec& g, int axis, double a, double b) {
  const double L = g.length(axis);
  double d = std::fmod(a - b, L);
  if (d > 0.5 * L) d -= L;
  if (d < -0.5 * L) d += L;
  return std::abs(d);
}

}  // namespace detail

/// The same run re-propagated from the transformed initial state in the transformed gauge.
template <class State, class MakeStepper>
guidance::PilotRun<State> propagate_twin(const guidance::PilotRun<State>& run, const GaugeFunction& lambda,
                                         MakeStepper&& make_stepper) {
  const auto& tl = run.timeline;
  auto tr = apply_gauge_transform(tl.snapshots.front(), run.model, lambda);
  auto stepper = make_stepper(tr.model);
  auto twin = dynamics::propagate(tr.state, stepper, tl.dt, tl.n_steps, tl.stride);
  return guidance::PilotRun<State>(std::move(tr.model), std::move(twin));
}

template <class State>
InvarianceReport check_velocity_invariance(const guidance::PilotRun<State>& a, const guidance::PilotRun<State>& b,
                                           double t) {
  const auto& fa = a.flow.field(a.timeline.index_at(t));
  const auto& fb = b.flow.field(b.timeline.index_at(t));
  InvarianceReport r;
  for (int c = 0; c < static_cast<int>(fa.ncomp); ++c) {
    const auto part = detail::compare(fa.v[c], fb.v[c], fa.masked, fb.masked);
    r.max_deviation = std::max(r.max_deviation, part.max_deviation);
    r.compared = part.compared;
    r.mask_mismatch = part.mask_mismatch;
  }
  return r;
}

/// Compares |psi|^2 / one^2 between gauges. The transformed gauge starts from
/// ln one(t0) = -e_I lambda(x0, t0) / hbar c.
template <class State>
InvarianceReport check_density_invariance(const guidance::PilotRun<State>& a, const guidance::PilotRun<State>& b,
                                          const GaugeFunction& lambda, double t,
                                          weylscale::DensityMethod method = weylscale::DensityMethod::Backward,
                                          const guidance::IntegratorOptions& opt = {}) {
  const double t0 = b.timeline.t0;
  const SystemModel& mb = b.model;
  const auto da = weylscale::conserved_density_grid(a, t, method, opt);
  const auto db = weylscale::conserved_density_grid(
      b, t, method, opt, [&](const Point& q) { return initial_log_scale(mb, lambda, q, t0); });
  auto r = detail::compare(da.rho, db.rho, node_mask(da.born), node_mask(db.born));
  r.degraded = da.degraded || db.degraded;
  return r;
}

/// Largest periodic distance between trajectory endpoints seeded identically in both gauges.
template <class State>
InvarianceReport check_trajectory_invariance(const guidance::PilotRun<State>& a, const guidance::PilotRun<State>& b,
                                             const std::vector<Point>& seeds, double t0, double t1,
                                             const guidance::IntegratorOptions& opt = {}) {
  const GridSpec& g = a.model.grid;
  InvarianceReport r;
  std::vector<double> dev(seeds.size(), 0.0);
  std::vector<std::uint8_t> bad(seeds.size(), 0);
  parallel_for(seeds.size(), [&](std::size_t i) {
    const auto ea = guidance::forward_endpoint(a.flow, seeds[i], t0, t1, opt);
    const auto eb = guidance::forward_endpoint(b.flow, seeds[i], t0, t1, opt);
    double d = 0.0;
    for (int axis = 0; axis < g.dim(); ++axis)
      d = std::max(d, detail::periodic_gap(g, axis, ea.q[axis], eb.q[axis]));
    dev[i] = d;
    bad[i] = ea.unreliable() || eb.unreliable();
  });
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (bad[i]) {
      r.degraded = true;
      continue;
    }
    ++r.compared;
    r.max_deviation = std::max(r.max_deviation, dev[i]);
  }
  return r;
}

/// Q computed before and after the transform of a single state.
inline InvarianceReport check_quantum_potential_invariance(const ComplexScalarField& psi, const SystemModel& m,
                                                           const GaugeFunction& lambda) {
  const auto tr = apply_gauge_transform(psi, m, lambda);
  const auto qa = weylscale::quantum_potential(psi, m);
  const auto qb = weylscale::quantum_potential(tr.state, tr.model);
  return detail::compare(qa.q, qb.q, qa.masked, qb.masked);
}

}  // namespace pilotwave::gauge
