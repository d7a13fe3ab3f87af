#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pilotwave/equilibrium/ensemble.hpp"

namespace pilotwave::equilibrium {

/// Relative entropy value; +inf when the support condition fails.
struct HValue {
  double value = 0.0;
  std::size_t support_violations = 0;
  std::string diagnostic;

  bool finite() const { return std::isfinite(value); }
};

/// Fine-grained H = sum rho ln(rho / rho_eq) dV over grid nodes.
inline HValue h_function_fine(const GridSpec& g, const std::vector<double>& rho, const std::vector<double>& rho_eq) {
  if (rho.size() != g.size() || rho_eq.size() != g.size()) throw ConfigError("densities do not match the grid");
  HValue h;
  long double acc = 0.0L;
  std::size_t first_bad = 0;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    if (rho[k] < 0.0 || rho_eq[k] < 0.0) throw ConfigError("densities must be non-negative");
    if (rho[k] == 0.0) continue;
    if (rho_eq[k] == 0.0) {
      if (h.support_violations++ == 0) first_bad = k;
      continue;
    }
    acc += static_cast<long double>(rho[k]) * std::log(static_cast<long double>(rho[k]) / rho_eq[k]);
  }
  if (h.support_violations > 0) {
    h.value = std::numeric_limits<double>::infinity();
    const Point p = g.node(first_bad);
    h.diagnostic = std::to_string(h.support_violations) + " node(s) carry mass where the equilibrium density vanishes, first at (" +
                   std::to_string(p[0]) + ", " + std::to_string(p[1]) + ")";
    return h;
  }
  h.value = static_cast<double>(acc) * g.cell_volume();
  return h;
}

inline HValue h_function_fine(const weylscale::DensitySnapshot& rho, const weylscale::DensitySnapshot& rho_eq) {
  if (!(rho.grid == rho_eq.grid)) throw ConfigError("densities live on different grids");
  return h_function_fine(rho.grid, rho.rho, rho_eq.rho);
}

/// Uniform cells that tile the periodic domain, each an integer number (>= 4)
/// of grid spacings wide. Cell edges fall on nodes; such a node's cell is
/// shared half and half by the two neighbouring coarse cells.
class CoarseGraining {
 public:
  CoarseGraining(GridSpec g, std::size_t cells_x, std::size_t cells_y = 1) : grid_(std::move(g)), cells_{cells_x, cells_y} {
    if (grid_.dim() == 1) cells_[1] = 1;
    for (int a = 0; a < grid_.dim(); ++a) {
      const std::size_t n = grid_.points(a), k = cells_[static_cast<std::size_t>(a)];
      if (k == 0 || n % k != 0) throw ConfigError("coarse cells must tile the grid exactly");
      if (n / k < 4) throw ConfigError("each coarse cell must span at least 4 grid points");
    }
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t cells(int axis) const { return cells_[static_cast<std::size_t>(axis)]; }
  std::size_t size() const { return cells_[0] * cells_[1]; }
  double edge(int axis, std::size_t j) const {
    return grid_.lower(axis) + grid_.length(axis) * static_cast<double>(j) / static_cast<double>(cells(axis));
  }

  /// Cell index of a point (wrapped into the domain first).
  std::size_t cell_of(const Point& p) const {
    const Point q = grid_.wrap(p);
    std::array<std::size_t, 2> c{0, 0};
    for (int a = 0; a < grid_.dim(); ++a) {
      const double u = (q[a] - grid_.lower(a)) / grid_.length(a) * static_cast<double>(cells(a));
      c[static_cast<std::size_t>(a)] = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(u))), cells(a) - 1);
    }
    return c[0] * cells_[1] + c[1];
  }

  /// Occupancy counts of an ensemble.
  std::vector<std::size_t> histogram(const Ensemble& e) const {
    std::vector<std::size_t> h(size(), 0);
    for (const auto& p : e.positions) ++h[cell_of(p)];
    return h;
  }

  /// Cell integrals of a grid density, normalized to sum to one.
  std::vector<double> cell_probabilities(const std::vector<double>& rho) const {
    if (rho.size() != grid_.size()) throw ConfigError("density does not match the grid");
    std::vector<double> q(size(), 0.0);
    const std::size_t ny = grid_.dim() == 2 ? grid_.points(1) : 1;
    for (std::size_t k = 0; k < rho.size(); ++k) {
      const auto sx = shares(0, grid_.dim() == 2 ? k / ny : k);
      const auto sy = grid_.dim() == 2 ? shares(1, k % ny) : Shares{{0, 0}, {1.0, 0.0}};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          const double w = sx.w[i] * sy.w[j];
          if (w > 0.0) q[sx.cell[i] * cells_[1] + sy.cell[j]] += w * rho[k];
        }
    }
    double total = 0.0;
    for (double v : q) total += v;
    if (!(total > 0.0)) throw ConfigError("density has no mass");
    for (double& v : q) v /= total;
    return q;
  }

 private:
  struct Shares {
    std::array<std::size_t, 2> cell;
    std::array<double, 2> w;
  };

  Shares shares(int axis, std::size_t i) const {
    const std::size_t m = grid_.points(axis) / cells(axis);
    const std::size_t c = i / m;
    if (i % m != 0) return {{c, c}, {1.0, 0.0}};
    return {{c, (c + cells(axis) - 1) % cells(axis)}, {0.5, 0.5}};
  }

  GridSpec grid_;
  std::array<std::size_t, 2> cells_;
};

/// sum_cells p ln(p / q) for normalized cell probabilities.
inline HValue relative_entropy(const std::vector<double>& p, const std::vector<double>& q) {
  HValue h;
  double acc = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (p[c] == 0.0) continue;
    if (q[c] == 0.0) {
      ++h.support_violations;
      continue;
    }
    acc += p[c] * std::log(p[c] / q[c]);
  }
  if (h.support_violations > 0) {
    h.value = std::numeric_limits<double>::infinity();
    h.diagnostic = std::to_string(h.support_violations) + " occupied cell(s) have zero equilibrium weight";
  } else {
    h.value = acc;
  }
  return h;
}

inline std::vector<double> frequencies(const std::vector<std::size_t>& counts) {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  std::vector<double> p(counts.size(), 0.0);
  if (n == 0) return p;
  for (std::size_t c = 0; c < counts.size(); ++c) p[c] = static_cast<double>(counts[c]) / static_cast<double>(n);
  return p;
}

/// Coarse-grained H from the ensemble histogram against cell integrals of rho_eq.
inline HValue h_function_coarse(const Ensemble& e, const std::vector<double>& rho_eq, const CoarseGraining& cg) {
  if (e.positions.empty()) throw ConfigError("coarse-grained H needs a non-empty ensemble");
  return relative_entropy(frequencies(cg.histogram(e)), cg.cell_probabilities(rho_eq));
}

inline HValue h_function_coarse(const Ensemble& e, const weylscale::DensitySnapshot& rho_eq, const CoarseGraining& cg) {
  return h_function_coarse(e, rho_eq.rho, cg);
}

struct ConfidenceInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double confidence = 0.95;

  bool contains(double x) const { return lower <= x && x <= upper; }
};

namespace detail {

inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double w = pos - static_cast<double>(i);
  return i + 1 < v.size() ? (1.0 - w) * v[i] + w * v[i + 1] : v[i];
}

inline std::vector<std::size_t> multinomial(std::mt19937_64& rng, std::size_t n, const std::vector<double>& p) {
  std::vector<std::size_t> out(p.size(), 0);
  std::size_t left = n;
  double mass = 1.0;
  for (std::size_t c = 0; c + 1 < p.size() && left > 0; ++c) {
    const double pc = mass > 0.0 ? std::clamp(p[c] / mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::size_t> b(left, pc);
    out[c] = b(rng);
    left -= out[c];
    mass -= p[c];
  }
  if (!p.empty()) out.back() += left;
  return out;
}

}  // namespace detail

/// Nonparametric bootstrap of the coarse-grained H: members are resampled
/// with replacement and the basic (reverse percentile) interval is returned.
inline ConfidenceInterval bootstrap_h_coarse(const Ensemble& e, const std::vector<double>& rho_eq,
                                             const CoarseGraining& cg, std::size_t resamples, std::uint64_t seed,
                                             double confidence = 0.95) {
  const auto q = cg.cell_probabilities(rho_eq);
  const auto counts = cg.histogram(e);
  const std::size_t n = e.size();
  const auto p = frequencies(counts);
  ConfidenceInterval ci;
  ci.confidence = confidence;
  ci.estimate = relative_entropy(p, q).value;
  std::vector<double> h(resamples);
  parallel_for(resamples, [&](std::size_t r) {
    auto rng = detail::member_rng(seed, r);
    h[r] = relative_entropy(frequencies(detail::multinomial(rng, n, p)), q).value;
  });
  const double a = 0.5 * (1.0 - confidence);
  ci.lower = 2.0 * ci.estimate - detail::quantile(h, 1.0 - a);
  ci.upper = 2.0 * ci.estimate - detail::quantile(h, a);
  return ci;
}

/// Upper quantile of H for n members drawn exactly from the cell weights q:
/// the level below which an equilibrium ensemble's H stays with the given confidence.
inline double null_noise_band(const std::vector<double>& q, std::size_t n, std::size_t draws, std::uint64_t seed,
                              double confidence = 0.99) {
  std::vector<double> h(draws);
  parallel_for(draws, [&](std::size_t r) {
    auto rng = detail::member_rng(seed, r);
    h[r] = relative_entropy(frequencies(detail::multinomial(rng, n, q)), q).value;
  });
  return detail::quantile(std::move(h), confidence);
}

/// One-sided standard normal quantile, by bisection on erfc.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("quantile level must lie in (0, 1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::numbers::sqrt2) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Chi-square quantile (Wilson-Hilferty approximation).
inline double chi_square_quantile(std::size_t dof, double p) {
  const double k = static_cast<double>(dof);
  const double a = 2.0 / (9.0 * k);
  const double c = 1.0 - a + normal_quantile(p) * std::sqrt(a);
  return k * c * c * c;
}

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double critical = 0.0;
  double confidence = 0.95;

  bool passes() const { return statistic <= critical; }
};

/// Pearson goodness of fit of counts against cell probabilities. Cells with
/// expected count below `min_expected` are pooled into one bin.
inline ChiSquareResult chi_square_test(const std::vector<std::size_t>& counts, const std::vector<double>& probs,
                                       double confidence = 0.95, double min_expected = 5.0) {
  if (counts.size() != probs.size()) throw ConfigError("counts and probabilities differ in length");
  std::size_t n = 0;
  for (auto c : counts) n += c;
  std::vector<double> obs, expd;
  double pooled_o = 0.0, pooled_e = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double e = probs[c] * static_cast<double>(n);
    if (e < min_expected) {
      pooled_o += static_cast<double>(counts[c]);
      pooled_e += e;
    } else {
      obs.push_back(static_cast<double>(counts[c]));
      expd.push_back(e);
    }
  }
  if (pooled_e > 0.0) {
    obs.push_back(pooled_o);
    expd.push_back(pooled_e);
  }
  if (obs.size() < 2) throw ConfigError("chi-square test needs at least two populated bins");
  ChiSquareResult r;
  r.confidence = confidence;
  for (std::size_t i = 0; i < obs.size(); ++i) r.statistic += (obs[i] - expd[i]) * (obs[i] - expd[i]) / expd[i];
  r.dof = obs.size() - 1;
  r.critical = chi_square_quantile(r.dof, confidence);
  return r;
}

/// Density at t carried along the backward trajectories of an equilibrium
/// snapshot: rho(x, t) = rho_eq(x, t) * ratio0(x0), where ratio0 = rho / rho_eq
/// at the start of the run is constant along each trajectory.
inline std::vector<double> transport_ratio(const weylscale::DensitySnapshot& eq, const DensityFunction& ratio0) {
  if (eq.origin.size() != eq.rho.size()) throw ConfigError("transport needs a backward-reconstructed snapshot");
  std::vector<double> out(eq.rho.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = eq.rho[k] * ratio0(eq.origin[k]);
  return out;
}

}  // namespace pilotwave::equilibrium
