#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "pilotwave/core/parallel.hpp"
#include "pilotwave/core/polar.hpp"
#include "pilotwave/guidance/run.hpp"

namespace pilotwave::weylscale {

enum class DensityMethod { Backward, Comoving };

inline const char* to_string(DensityMethod m) { return m == DensityMethod::Backward ? "backward" : "comoving"; }

/// Snapshots with more than this fraction of unreliable trajectories are degraded.
inline constexpr double kDegradedFraction = 0.05;

/// The conserved ratio |psi|^2 / one^2[C] on the grid at one time.
struct DensitySnapshot {
  GridSpec grid;
  std::vector<double> rho;
  std::vector<double> born;    ///< |psi|^2 at the same time
  std::vector<double> ln_one;  ///< ln one along the trajectory through each node
  std::vector<Point> origin;   ///< start of the trajectory through each node (backward method)
  std::vector<std::uint8_t> flagged;
  double t = 0.0;
  DensityMethod method = DensityMethod::Backward;
  double unreliable_fraction = 0.0;
  bool degraded = false;
};

/// Riemann sum of rho times the cell volume.
inline double total_norm(const DensitySnapshot& s) {
  return std::accumulate(s.rho.begin(), s.rho.end(), 0.0) * s.grid.cell_volume();
}

inline double total_norm(const std::vector<double>& rho, const GridSpec& g) {
  return std::accumulate(rho.begin(), rho.end(), 0.0) * g.cell_volume();
}

/// ln one at t0 as a function of the starting point; empty means ln one(t0) = 0.
using InitialLogScale = std::function<double(const Point&)>;

namespace detail {

/// Fritsch-Carlson monotone cubic through (x_i, y_i), x strictly increasing.
class Pchip {
 public:
  Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)), d_(x_.size()) {
    const std::size_t n = x_.size();
    if (n < 2) throw ConfigError("monotone interpolation needs two points");
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      if (!(h[i] > 0.0)) throw DegenerateFieldError("trajectory positions are not strictly ordered");
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_[0] = end_slope(h[0], h.size() > 1 ? h[1] : h[0], delta[0], delta.size() > 1 ? delta[1] : delta[0]);
    d_[n - 1] = end_slope(h[n - 2], n > 2 ? h[n - 3] : h[n - 2], delta[n - 2], n > 2 ? delta[n - 3] : delta[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        d_[i] = 0.0;
      } else {
        const double w1 = 2.0 * h[i] + h[i - 1];
        const double w2 = h[i] + 2.0 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
  }

  double operator()(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    i = std::min(i, x_.size() - 2);
    const double h = x_[i + 1] - x_[i];
    const double s = (x - x_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y_[i] + (s3 - 2 * s2 + s) * h * d_[i] + (-2 * s3 + 3 * s2) * y_[i + 1] +
           (s3 - s2) * h * d_[i + 1];
  }

 private:
  static double end_slope(double h0, double h1, double d0, double d1) {
    double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(d) > std::abs(3 * d0)) return 3 * d0;
    return d;
  }

  std::vector<double> x_, y_, d_;
};

inline void finish_snapshot(DensitySnapshot& s, const std::vector<std::uint8_t>& masked,
                            const std::vector<std::uint8_t>& unreliable) {
  std::size_t counted = 0, bad = 0;
  s.rho.resize(s.born.size());
  for (std::size_t k = 0; k < s.rho.size(); ++k) {
    s.rho[k] = s.born[k] * std::exp(-2.0 * s.ln_one[k]);
    if (masked[k]) continue;
    ++counted;
    if (unreliable[k]) ++bad;
  }
  s.flagged = unreliable;
  s.unreliable_fraction = counted ? static_cast<double>(bad) / static_cast<double>(counted) : 0.0;
  s.degraded = s.unreliable_fraction > kDegradedFraction;
}

/// At masked nodes of a 1D grid the traced ln one is replaced by linear
/// interpolation between the nearest unmasked neighbours.
inline void fill_masked_ln_one(const GridSpec& g, std::vector<double>& ln_one, const std::vector<std::uint8_t>& masked) {
  if (g.dim() != 1) return;
  const std::size_t n = ln_one.size();
  std::vector<std::size_t> good;
  for (std::size_t k = 0; k < n; ++k)
    if (!masked[k]) good.push_back(k);
  if (good.empty() || good.size() == n) return;
  for (std::size_t gi = 0; gi < good.size(); ++gi) {
    const std::size_t a = good[gi];
    const std::size_t b = good[(gi + 1) % good.size()];
    const std::size_t gap = (b + n - a) % n;
    for (std::size_t s = 1; s < gap; ++s) {
      const double w = static_cast<double>(s) / static_cast<double>(gap);
      ln_one[(a + s) % n] = (1.0 - w) * ln_one[a] + w * ln_one[b];
    }
  }
}

}  // namespace detail

/// Conserved density at a stored time t.
/// backward: trace every node back to t0 and divide |psi|^2 by one^2 of that path.
/// comoving: carry ln one forward from every node at t0 and interpolate it
/// (monotone cubic in the sorted positions) onto the grid at t; 1D only.
template <class State>
DensitySnapshot conserved_density_grid(const guidance::PilotRun<State>& run, double t, DensityMethod method,
                                       const guidance::IntegratorOptions& opt = {},
                                       const InitialLogScale& initial = {}) {
  const auto& psi = run.timeline.at(t);
  const GridSpec& g = psi.grid;
  const std::size_t n = g.size();
  DensitySnapshot s;
  s.grid = g;
  s.t = t;
  s.method = method;
  s.born = born_density(psi);
  s.ln_one.assign(n, 0.0);
  const auto masked = node_mask(s.born);
  std::vector<std::uint8_t> unreliable(n, 0);
  const double t0 = run.timeline.t0;

  if (method == DensityMethod::Backward) {
    s.origin.assign(n, Point{0.0, 0.0});
    parallel_for(n, [&](std::size_t k) {
      const auto end = guidance::backward_endpoint(run.flow, g.node(k), t, opt);
      s.ln_one[k] = end.ln_one + (initial ? initial(end.q) : 0.0);
      s.origin[k] = end.q;
      unreliable[k] = end.unreliable() ? 1 : 0;
    });
    detail::fill_masked_ln_one(g, s.ln_one, masked);
  } else {
    if (g.dim() != 1) throw UnsupportedError("comoving reconstruction is only offered on 1D grids");
    const auto mask0 = node_mask(born_density(run.timeline.snapshots.front()));
    std::vector<double> pos(n), ln(n);
    std::vector<std::uint8_t> bad(n, 0);
    parallel_for(n, [&](std::size_t k) {
      const auto end = guidance::forward_endpoint(run.flow, g.node(k), t0, t, opt);
      pos[k] = end.q_unwrapped[0];
      ln[k] = end.ln_one + (initial ? initial(g.node(k)) : 0.0);
      bad[k] = end.unreliable() ? 1 : 0;
    });
    // The flow is an order-preserving circle map: extend by one period on each side.
    const double L = g.length(0);
    std::vector<double> xs, ys;
    xs.reserve(3 * n);
    ys.reserve(3 * n);
    for (int shift = -1; shift <= 1; ++shift)
      for (std::size_t k = 0; k < n; ++k) {
        xs.push_back(pos[k] + shift * L);
        ys.push_back(ln[k]);
      }
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> sx, sy;
    sx.reserve(xs.size());
    sy.reserve(xs.size());
    for (std::size_t i : order) {
      if (!sx.empty() && !(xs[i] > sx.back())) continue;  // collapsed points carry no extra information
      sx.push_back(xs[i]);
      sy.push_back(ys[i]);
    }
    const detail::Pchip interp(std::move(sx), std::move(sy));
    const double base = pos[0];
    for (std::size_t k = 0; k < n; ++k) {
      // evaluate at the image of node k that lies within one period of the first seed
      double x = g.coord(0, k);
      x += L * std::floor((base - x) / L + 1.0);
      s.ln_one[k] = interp(x);
    }
    // reliability is attributed to the seeds that started on unmasked nodes
    for (std::size_t k = 0; k < n; ++k) unreliable[k] = mask0[k] ? 0 : bad[k];
    std::size_t counted = 0, nbad = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (mask0[k]) continue;
      ++counted;
      nbad += bad[k];
    }
    detail::finish_snapshot(s, std::vector<std::uint8_t>(n, 0), unreliable);
    s.unreliable_fraction = counted ? static_cast<double>(nbad) / static_cast<double>(counted) : 0.0;
    s.degraded = s.unreliable_fraction > kDegradedFraction;
    return s;
  }
  detail::finish_snapshot(s, masked, unreliable);
  return s;
}

}  // namespace pilotwave::weylscale
