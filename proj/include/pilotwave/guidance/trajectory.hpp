#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "pilotwave/core/interpolate.hpp"
#include "pilotwave/core/parallel.hpp"
#include "pilotwave/dynamics/timeline.hpp"
#include "pilotwave/guidance/velocity.hpp"
#include "pilotwave/weylscale/log_scale.hpp"

namespace pilotwave::guidance {

struct FlowSample {
  std::array<double, 2> v{0.0, 0.0};
  bool flagged = false;
};

/// Velocity fields at every snapshot of a run, interpolated in space with
/// periodic Lagrange stencils and linearly in time.
class VelocityTimeline {
 public:
  VelocityTimeline(std::vector<VelocityField> fields, double t0, double snapshot_dt, SystemModel model,
                   InterpolationOrder order = InterpolationOrder::Septic)
      : fields_(std::move(fields)), t0_(t0), sdt_(snapshot_dt), model_(std::move(model)), order_(order) {
    if (fields_.empty()) throw ConfigError("velocity timeline needs at least one field");
    if (fields_.size() > 1 && !(sdt_ > 0.0)) throw ConfigError("snapshot spacing must be positive");
  }

  template <class State>
  VelocityTimeline(const dynamics::Timeline<State>& tl, SystemModel model,
                   InterpolationOrder order = InterpolationOrder::Septic)
      : VelocityTimeline(fields_of(tl, model), tl.t0, tl.snapshot_dt(), model, order) {}

  template <class State>
  static std::vector<VelocityField> fields_of(const dynamics::Timeline<State>& tl, const SystemModel& m) {
    std::vector<VelocityField> out(tl.snapshots.size());
    parallel_for(out.size(), [&](std::size_t i) { out[i] = velocity_field(tl.snapshots[i], m); });
    return out;
  }

  const SystemModel& model() const { return model_; }
  const GridSpec& grid() const { return model_.grid; }
  int dim() const { return model_.grid.dim(); }
  double t0() const { return t0_; }
  double t_end() const { return t0_ + sdt_ * static_cast<double>(fields_.size() - 1); }
  double snapshot_dt() const { return sdt_; }
  std::size_t size() const { return fields_.size(); }
  const VelocityField& field(std::size_t i) const { return fields_[i]; }
  const std::vector<VelocityField>& fields() const { return fields_; }

  /// Largest node speed over all snapshots, masked nodes included (after capping).
  double max_speed() const {
    double m = 0.0;
    for (const auto& f : fields_)
      for (std::size_t k = 0; k < f.grid.size(); ++k) m = std::max(m, f.speed(k));
    return m;
  }

  FlowSample velocity(const Point& q, double t) const {
    std::size_t i = 0;
    double w = 0.0;
    if (fields_.size() > 1) {
      const double tol = 1e-9 * sdt_;
      if (t < t0_ - tol || t > t_end() + tol) throw ConfigError("trajectory time outside the velocity timeline");
      double u = std::clamp((t - t0_) / sdt_, 0.0, static_cast<double>(fields_.size() - 1));
      i = std::min(static_cast<std::size_t>(std::floor(u)), fields_.size() - 2);
      w = u - static_cast<double>(i);
    }
    const auto st = grid_stencil(model_.grid, q, order_);
    FlowSample out;
    double cap = 0.0;
    const int nc = fields_[i].ncomp;
    auto accumulate = [&](const VelocityField& f, double weight) {
      cap = std::max(cap, f.cap());
      st.for_each([&](std::size_t k, double lw) {
        if (f.masked[k]) out.flagged = true;
        for (int a = 0; a < nc; ++a) out.v[a] += weight * lw * f.v[a][k];
      });
    };
    if (w < 1.0) accumulate(fields_[i], 1.0 - w);
    if (w > 0.0) accumulate(fields_[i + 1], w);
    for (int a = 0; a < nc; ++a) {
      if (std::abs(out.v[a]) > cap) {
        out.v[a] = std::copysign(cap, out.v[a]);
        out.flagged = true;
      }
    }
    return out;
  }

  double log_scale_step(const Point& q, const Point& q2, double t, double t2) const {
    return weylscale::accumulate_log_scale_step(0.0, model_, q, q2, t, t2);
  }

 private:
  std::vector<VelocityField> fields_;
  double t0_;
  double sdt_;
  SystemModel model_;
  InterpolationOrder order_;
};

struct TrajectorySample {
  double t = 0.0;
  Point q{0.0, 0.0};            ///< wrapped into the periodic domain
  Point q_unwrapped{0.0, 0.0};  ///< continuous path, for line integrals and crossings
  double ln_one = 0.0;
  bool flagged = false;
};

/// Fraction of flagged steps above which a trajectory is unreliable.
inline constexpr double kUnreliableFraction = 0.01;

struct Trajectory {
  SystemKind system = SystemKind::Schrodinger1D;
  std::vector<TrajectorySample> samples;
  std::size_t flagged_steps = 0;

  std::size_t steps() const { return samples.empty() ? 0 : samples.size() - 1; }
  bool unreliable() const {
    return static_cast<double>(flagged_steps) > kUnreliableFraction * static_cast<double>(steps());
  }
  const TrajectorySample& front() const { return samples.front(); }
  const TrajectorySample& back() const { return samples.back(); }
};

/// End point of a trace without the intermediate samples.
struct TraceEnd {
  Point q{0.0, 0.0};
  Point q_unwrapped{0.0, 0.0};
  double ln_one = 0.0;  ///< accumulated in the direction of travel
  std::size_t steps = 0;
  std::size_t flagged_steps = 0;
  bool unreliable() const {
    return static_cast<double>(flagged_steps) > kUnreliableFraction * static_cast<double>(steps);
  }
};

struct IntegratorOptions {
  /// Substeps shrink by 4x until every RK4 stage moves at most this many cells.
  double max_cells_per_step = 1.0;
  int max_refinements = 30;
};

namespace detail {

inline double norm2(const std::array<double, 2>& v, int dim) {
  return dim == 1 ? std::abs(v[0]) : std::hypot(v[0], v[1]);
}

/// RK4 through the flow from (q, t_from) to t_to in macro steps of at most one
/// snapshot interval; emit(sample) is called after every (sub)step.
template <class Flow, class Emit>
TraceEnd advance(const Flow& flow, const Point& q_start, double t_from, double t_to, const IntegratorOptions& opt,
                 Emit&& emit) {
  const GridSpec& g = flow.grid();
  const int dim = flow.dim();
  TraceEnd end;
  end.q_unwrapped = q_start;
  end.q = g.wrap(q_start);
  const double span = t_to - t_from;
  if (span == 0.0) return end;
  const double base = flow.snapshot_dt() > 0.0 ? flow.snapshot_dt() : std::abs(span);
  const auto n_macro = static_cast<long>(std::max(1.0, std::ceil(std::abs(span) / base - 1e-9)));
  const double h = span / static_cast<double>(n_macro);
  const double dx_max = opt.max_cells_per_step * g.min_spacing();

  Point q = q_start;
  double ln_one = 0.0;
  auto vel = [&](const Point& p, double t) { return flow.velocity(g.wrap(p), t); };
  auto shifted = [&](const Point& p, const std::array<double, 2>& k, double s) {
    Point r = p;
    for (int a = 0; a < dim; ++a) r[a] += s * k[a];
    return r;
  };

  for (long m = 0; m < n_macro; ++m) {
    const double ta = t_from + h * static_cast<double>(m);
    const double tb = m + 1 == n_macro ? t_to : t_from + h * static_cast<double>(m + 1);
    double t = ta;
    while (true) {
      const double remaining = tb - t;
      if (remaining == 0.0 || std::abs(remaining) <= 1e-14 * std::abs(h)) break;
      const FlowSample s1 = vel(q, t);
      double hs = remaining;
      int refinements = 0;
      while (std::abs(hs) * norm2(s1.v, dim) > dx_max && refinements < opt.max_refinements) {
        hs /= 4.0;
        ++refinements;
      }
      FlowSample s2, s3, s4;
      while (true) {
        s2 = vel(shifted(q, s1.v, hs / 2), t + hs / 2);
        s3 = vel(shifted(q, s2.v, hs / 2), t + hs / 2);
        s4 = vel(shifted(q, s3.v, hs), t + hs);
        const double fastest = std::max({norm2(s2.v, dim), norm2(s3.v, dim), norm2(s4.v, dim)});
        if (std::abs(hs) * fastest <= 4.0 * dx_max || refinements >= opt.max_refinements) break;
        hs /= 4.0;
        ++refinements;
      }
      Point q2 = q;
      for (int a = 0; a < dim; ++a) q2[a] += hs / 6.0 * (s1.v[a] + 2.0 * s2.v[a] + 2.0 * s3.v[a] + s4.v[a]);
      double t2 = t + hs;
      if (std::abs(tb - t2) <= 1e-14 * std::abs(h)) t2 = tb;
      ln_one += flow.log_scale_step(q, q2, t, t2);
      const bool flagged = s1.flagged || s2.flagged || s3.flagged || s4.flagged;
      ++end.steps;
      if (flagged) ++end.flagged_steps;
      q = q2;
      t = t2;
      emit(TrajectorySample{t, g.wrap(q), q, ln_one, flagged});
    }
  }
  end.q_unwrapped = q;
  end.q = g.wrap(q);
  end.ln_one = ln_one;
  return end;
}

}  // namespace detail

/// Forward integration of dq/dt = v(q, t) from (q0, t0) to t1 with ln one
/// accumulated alongside (ln one(t0) = 0 in the reference gauge).
template <class Flow>
Trajectory integrate_trajectory(const Flow& flow, const Point& q0, double t0, double t1,
                                const IntegratorOptions& opt = {}) {
  if (!(t1 >= t0)) throw ConfigError("integrate_trajectory needs t1 >= t0");
  Trajectory tr;
  tr.system = flow.model().kind;
  tr.samples.push_back(TrajectorySample{t0, flow.grid().wrap(q0), q0, 0.0, false});
  const auto end = detail::advance(flow, q0, t0, t1, opt, [&](const TrajectorySample& s) { tr.samples.push_back(s); });
  tr.flagged_steps = end.flagged_steps;
  return tr;
}

/// Follows the flow backward from (x, t) to the start of the run and returns
/// the path in increasing time with ln one accumulated forward from zero.
template <class Flow>
Trajectory backward_trace(const Flow& flow, const Point& x, double t, const IntegratorOptions& opt = {}) {
  const double t0 = flow.t0();
  if (t < t0) throw ConfigError("backward_trace needs t >= t0");
  std::vector<TrajectorySample> rev;
  rev.push_back(TrajectorySample{t, flow.grid().wrap(x), x, 0.0, false});
  const auto end = detail::advance(flow, x, t, t0, opt, [&](const TrajectorySample& s) { rev.push_back(s); });
  std::reverse(rev.begin(), rev.end());
  Trajectory tr;
  tr.system = flow.model().kind;
  tr.flagged_steps = end.flagged_steps;
  tr.samples.reserve(rev.size());
  double ln_one = 0.0;
  for (std::size_t i = 0; i < rev.size(); ++i) {
    TrajectorySample s = rev[i];
    if (i > 0) ln_one += flow.log_scale_step(rev[i - 1].q_unwrapped, rev[i].q_unwrapped, rev[i - 1].t, rev[i].t);
    s.ln_one = ln_one;
    tr.samples.push_back(s);
  }
  return tr;
}

/// ln one at (x, t) along the trajectory through that point, without storing the path.
template <class Flow>
TraceEnd backward_endpoint(const Flow& flow, const Point& x, double t, const IntegratorOptions& opt = {}) {
  auto end = detail::advance(flow, x, t, flow.t0(), opt, [](const TrajectorySample&) {});
  end.ln_one = -end.ln_one;
  return end;
}

/// Forward counterpart of backward_endpoint.
template <class Flow>
TraceEnd forward_endpoint(const Flow& flow, const Point& q0, double t0, double t1, const IntegratorOptions& opt = {}) {
  return detail::advance(flow, q0, t0, t1, opt, [](const TrajectorySample&) {});
}

}  // namespace pilotwave::guidance
