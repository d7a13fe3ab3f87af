#pragma once

#include <cmath>
#include <vector>

#include "pilotwave/weylscale/density.hpp"

namespace pilotwave::weylscale {

/// Q = -(hbar^2 / 2m) D^2 R / R with D = grad + (e_I / hbar c) A at Weyl weight 1.
/// dr2_over_r holds D^2 R / R per node; both are zero on masked nodes.
struct QuantumPotential {
  GridSpec grid;
  std::vector<double> q;
  std::vector<double> d2r_over_r;
  std::vector<std::uint8_t> masked;
};

/// Scalar systems (Schrodinger1D, TwoParticle1D). Derivatives are taken in long double. Uses
///   R''/R = Re(psi''/psi) + Im(psi'/psi)^2,  R'/R = Re(psi'/psi),
///   D^2R/R = R''/R + k^2 A^2 + k (div A + 2 A R'/R)   per axis.
inline QuantumPotential quantum_potential(const ComplexScalarField& psi, const SystemModel& m) {
  if (m.kind != SystemKind::Schrodinger1D && m.kind != SystemKind::TwoParticle1D)
    throw UnsupportedError("quantum potential is implemented for scalar systems");
  if (!(psi.grid == m.grid)) throw ConfigError("state grid does not match the system grid");
  const GridSpec& g = psi.grid;
  const std::size_t n = g.size();
  const double hbar = m.constants.hbar;
  const double c = m.constants.c;
  QuantumPotential out{g, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), {}};
  const auto rho = born_density(psi);
  out.masked = node_mask(rho);
  const std::size_t ny = g.dim() == 2 ? g.points(1) : 1;
  const bool has_a = !m.gauge.a_source(0).is_zero();
  for (int j = 0; j < g.dim(); ++j) {
    const auto d = extended_derivatives(g, psi.values, j);
    const double k = m.axis_coupling(j).e_I / (hbar * c);
    const double mass = m.axis_mass(j);
    std::vector<double> a(g.points(j), 0.0), da(g.points(j), 0.0);
    if (has_a && k != 0.0) {
      const auto div = m.gauge.a_source(0).derivative(expr::Var::X);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = g.coord(j, i);
        a[i] = m.gauge.a(0, x, 0.0, psi.time);
        da[i] = div(x, 0.0, psi.time);
      }
    }
    for (std::size_t idx = 0; idx < n; ++idx) {
      if (out.masked[idx]) continue;
      const std::size_t i = j == 0 ? idx / ny : idx % ny;
      const std::complex<long double> p(psi.values[idx].real(), psi.values[idx].imag());
      const auto r1 = d.first[idx] / p;
      const auto r2 = d.second[idx] / p;
      long double v = r2.real() + r1.imag() * r1.imag();
      v += k * k * a[i] * a[i] + k * (da[i] + 2.0L * a[i] * r1.real());
      out.d2r_over_r[idx] += static_cast<double>(v);
      out.q[idx] += static_cast<double>(-hbar * hbar / (2.0 * mass) * v);
    }
  }
  return out;
}

/// Field residual plus its L2 norm (sqrt of sum r^2 dV over the included nodes).
struct Residual {
  GridSpec grid;
  std::vector<double> r;
  double l2 = 0.0;
  bool degraded = false;
};

enum class ResidualWeight {
  Uniform,  ///< plain L2 over unmasked nodes
  Density,  ///< L2 weighted by |psi|^2 (suppresses the far tails)
};

inline double weighted_l2(const GridSpec& g, const std::vector<double>& r, const std::vector<std::uint8_t>& masked,
                          const std::vector<double>* weight) {
  double acc = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!masked.empty() && masked[k]) continue;
    acc += r[k] * r[k] * (weight ? (*weight)[k] : 1.0);
  }
  return std::sqrt(acc * g.cell_volume());
}

/// d rho / dt + div(rho v) for the conserved density: central difference of two
/// reconstructions one snapshot interval either side of t, spectral divergence at t.
template <class State>
Residual continuity_residual(const guidance::PilotRun<State>& run, double t,
                             DensityMethod method = DensityMethod::Backward,
                             const guidance::IntegratorOptions& opt = {}) {
  const double h = run.timeline.snapshot_dt();
  if (t - h < run.timeline.t0 - 1e-12 || t + h > run.timeline.t_end() + 1e-12)
    throw ConfigError("continuity residual needs snapshots on both sides of t");
  const auto lo = conserved_density_grid(run, t - h, method, opt);
  const auto mid = conserved_density_grid(run, t, method, opt);
  const auto hi = conserved_density_grid(run, t + h, method, opt);
  const GridSpec& g = mid.grid;
  const std::size_t n = g.size();
  const auto& vf = run.flow.field(run.timeline.index_at(t));
  Residual out{g, std::vector<double>(n, 0.0), 0.0, lo.degraded || mid.degraded || hi.degraded};
  for (int a = 0; a < g.dim(); ++a) {
    std::vector<double> flux(n);
    for (std::size_t k = 0; k < n; ++k) flux[k] = mid.rho[k] * vf.v[a][k];
    const auto div = spectral_derivative_real(g, flux, a);
    for (std::size_t k = 0; k < n; ++k) out.r[k] += div[k];
  }
  for (std::size_t k = 0; k < n; ++k) out.r[k] += (hi.rho[k] - lo.rho[k]) / (2.0 * h);
  out.l2 = weighted_l2(g, out.r, vf.masked, nullptr);
  return out;
}

/// Residual of  dS/dt + (grad S - e A / c)^2 / 2m + e phi - (hbar^2 / 2m) D^2R/R
/// with dS/dt = hbar arg(psi(t+h) conj psi(t-h)) / 2h; scalar systems only.
template <class State>
Residual hamilton_jacobi_residual(const guidance::PilotRun<State>& run, double t,
                                  ResidualWeight weight = ResidualWeight::Uniform) {
  const SystemModel& m = run.model;
  if (m.kind != SystemKind::Schrodinger1D && m.kind != SystemKind::TwoParticle1D)
    throw UnsupportedError("Hamilton-Jacobi residual is implemented for scalar systems");
  const double h = run.timeline.snapshot_dt();
  if (t - h < run.timeline.t0 - 1e-12 || t + h > run.timeline.t_end() + 1e-12)
    throw ConfigError("Hamilton-Jacobi residual needs snapshots on both sides of t");
  const auto& psi = run.timeline.at(t);
  const auto& lo = run.timeline.at(t - h);
  const auto& hi = run.timeline.at(t + h);
  const GridSpec& g = psi.grid;
  const std::size_t n = g.size();
  const double hbar = m.constants.hbar;
  const double c = m.constants.c;
  const auto qp = quantum_potential(psi, m);
  Residual out{g, std::vector<double>(n, 0.0), 0.0, false};
  const Spectrum spec(g, psi.values);
  const std::size_t ny = g.dim() == 2 ? g.points(1) : 1;
  const bool has_a = !m.gauge.a_source(0).is_zero();
  for (std::size_t k = 0; k < n; ++k) {
    if (qp.masked[k]) continue;
    out.r[k] = hbar * std::arg(hi.values[k] * std::conj(lo.values[k])) / (2.0 * h);
  }
  for (int j = 0; j < g.dim(); ++j) {
    const auto d1 = spec.derivative(j, 1);
    const double e = m.axis_coupling(j).e;
    const double mass = m.axis_mass(j);
    for (std::size_t k = 0; k < n; ++k) {
      if (qp.masked[k]) continue;
      const std::size_t i = j == 0 ? k / ny : k % ny;
      const double x = g.coord(j, i);
      double p = hbar * (d1[k] / psi.values[k]).imag();
      if (has_a) p -= e * m.gauge.a(0, x, 0.0, t) / c;
      out.r[k] += p * p / (2.0 * mass) + e * m.gauge.phi(x, 0.0, t);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (qp.masked[k]) continue;
    out.r[k] += qp.q[k];
    if (m.interaction) {
      const Point p = g.node(k);
      out.r[k] += (*m.interaction)(p[0], p[1], t);
    }
  }
  const auto rho = born_density(psi);
  out.l2 = weighted_l2(g, out.r, qp.masked, weight == ResidualWeight::Density ? &rho : nullptr);
  return out;
}

}  // namespace pilotwave::weylscale
