#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pilotwave/core/polar.hpp"
#include "pilotwave/dynamics/system.hpp"

namespace pilotwave::guidance {

/// Configuration-space velocity per node. Masked nodes hold the raw value
/// clipped to the cap (or zero where the density vanishes exactly).
struct VelocityField {
  GridSpec grid;
  int ncomp = 1;
  std::array<std::vector<double>, 2> v;
  std::vector<std::uint8_t> masked;
  double time = 0.0;
  double max_unmasked_speed = 0.0;

  double speed(std::size_t k) const {
    return ncomp == 1 ? std::abs(v[0][k]) : std::hypot(v[0][k], v[1][k]);
  }
  /// Velocities are clipped to this magnitude: 10 x the fastest unmasked node.
  double cap() const { return 10.0 * max_unmasked_speed; }
};

namespace detail {

/// Fills the bookkeeping shared by all guidance laws: node mask, unmasked
/// maximum and capping of masked nodes.
inline void finish(VelocityField& f, const std::vector<double>& density) {
  f.masked = node_mask(density);
  double mx = 0.0;
  for (std::size_t k = 0; k < density.size(); ++k)
    if (!f.masked[k]) mx = std::max(mx, f.speed(k));
  f.max_unmasked_speed = mx;
  const double cap = f.cap();
  for (std::size_t k = 0; k < density.size(); ++k) {
    if (!f.masked[k]) continue;
    for (int a = 0; a < f.ncomp; ++a) {
      double& x = f.v[a][k];
      if (!std::isfinite(x) || density[k] == 0.0) x = 0.0;
      x = std::clamp(x, -cap, cap);
    }
  }
}

/// hbar Im(conj(psi) d_axis psi) per node (the numerator of the phase gradient).
inline std::vector<double> phase_flux(const GridSpec& g, const std::vector<cplx>& psi, int axis, double hbar) {
  const auto d = spectral_derivative(g, psi, axis);
  std::vector<double> out(psi.size());
  for (std::size_t k = 0; k < psi.size(); ++k) out[k] = hbar * (std::conj(psi[k]) * d[k]).imag();
  return out;
}

inline void check_model(const SystemModel& m, SystemKind kind, const GridSpec& g) {
  if (m.kind != kind) throw ConfigError(std::string("velocity law needs a ") + to_string(kind) + " model");
  if (!(g == m.grid)) throw ConfigError("state grid does not match the system grid");
}

}  // namespace detail

/// v = (hbar Im(grad psi / psi) - e A / c) / m with the real charge e.
inline VelocityField velocity_schrodinger(const ComplexScalarField& psi, const SystemModel& m) {
  detail::check_model(m, SystemKind::Schrodinger1D, psi.grid);
  const GridSpec& g = psi.grid;
  const double hbar = m.constants.hbar;
  const double e = m.coupling[0].e;
  const double mass = m.masses[0];
  VelocityField f{g, 1, {}, {}, psi.time, 0.0};
  const auto rho = born_density(psi);
  const auto flux = detail::phase_flux(g, psi.values, 0, hbar);
  const bool has_a = e != 0.0 && !m.gauge.a_source(0).is_zero();
  f.v[0].resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    double p = rho[k] > 0.0 ? flux[k] / rho[k] : 0.0;
    if (has_a) p -= e * m.gauge.a(0, g.coord(0, k), 0.0, psi.time) / m.constants.c;
    f.v[0][k] = p / mass;
  }
  detail::finish(f, rho);
  return f;
}

/// v_j = (hbar Im(d_j psi / psi) - e_j A(x_j) / c) / m_j on the (x1, x2) grid.
inline VelocityField velocity_two_particle(const ComplexScalarField& psi, const SystemModel& m) {
  detail::check_model(m, SystemKind::TwoParticle1D, psi.grid);
  const GridSpec& g = psi.grid;
  const double hbar = m.constants.hbar;
  VelocityField f{g, 2, {}, {}, psi.time, 0.0};
  const auto rho = born_density(psi);
  const std::size_t ny = g.points(1);
  const bool has_a = !m.gauge.a_source(0).is_zero();
  for (int j = 0; j < 2; ++j) {
    const auto flux = detail::phase_flux(g, psi.values, j, hbar);
    const double e = m.coupling[static_cast<std::size_t>(j)].e;
    const double mass = m.masses[static_cast<std::size_t>(j)];
    std::vector<double> a1d(g.points(j), 0.0);
    if (has_a && e != 0.0)
      for (std::size_t i = 0; i < a1d.size(); ++i) a1d[i] = m.gauge.a(0, g.coord(j, i), 0.0, psi.time);
    auto& v = f.v[j];
    v.resize(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      const std::size_t i = j == 0 ? k / ny : k % ny;
      const double p = rho[k] > 0.0 ? flux[k] / rho[k] : 0.0;
      v[k] = (p - e * a1d[i] / m.constants.c) / mass;
    }
  }
  detail::finish(f, rho);
  return f;
}

/// Local spin density s = (hbar / 2) psi^dagger sigma psi.
struct SpinDensity {
  GridSpec grid;
  std::array<std::vector<double>, 3> s;
};

inline SpinDensity spin_density(const SpinorField& psi, double hbar = 1.0) {
  SpinDensity out{psi.grid, {}};
  const std::size_t n = psi.grid.size();
  for (auto& c : out.s) c.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx up = psi.comps[0][k];
    const cplx dn = psi.comps[1][k];
    const cplx b = std::conj(up) * dn;
    out.s[0][k] = hbar * b.real();
    out.s[1][k] = hbar * b.imag();
    out.s[2][k] = 0.5 * hbar * (std::norm(up) - std::norm(dn));
  }
  return out;
}

/// Separate pieces of the Pauli velocity numerator, each divided by m rho_s:
/// convective (phase) part, spin-curl part and the Weyl term (2 e_I / hbar c)(A x s).
struct PauliVelocityParts {
  VelocityField total;
  std::array<std::vector<double>, 2> convective;
  std::array<std::vector<double>, 2> spin_curl;
  std::array<std::vector<double>, 2> weyl;
};

inline PauliVelocityParts velocity_pauli_parts(const SpinorField& psi, const SystemModel& m) {
  detail::check_model(m, SystemKind::Pauli2D, psi.grid);
  const GridSpec& g = psi.grid;
  const std::size_t n = g.size();
  const double hbar = m.constants.hbar;
  const double c = m.constants.c;
  const double e = m.coupling[0].e;
  const double e_i = m.coupling[0].e_I;
  const double mass = m.masses[0];
  const auto rho = born_density(psi);
  const auto sd = spin_density(psi, hbar);
  // in-plane curl of (0, 0, s_z) is (d_y s_z, -d_x s_z)
  const auto dsz_dx = spectral_derivative_real(g, sd.s[2], 0);
  const auto dsz_dy = spectral_derivative_real(g, sd.s[2], 1);
  std::array<std::vector<double>, 2> a{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (int i = 0; i < 2; ++i)
    if (!m.gauge.a_source(i).is_zero())
      for (std::size_t k = 0; k < n; ++k) {
        const Point p = g.node(k);
        a[i][k] = m.gauge.a(i, p[0], p[1], psi.time);
      }
  PauliVelocityParts out;
  out.total = VelocityField{g, 2, {}, {}, psi.time, 0.0};
  const double weyl_k = 2.0 * e_i / (hbar * c);
  for (int i = 0; i < 2; ++i) {
    const auto f_up = detail::phase_flux(g, psi.comps[0], i, hbar);
    const auto f_dn = detail::phase_flux(g, psi.comps[1], i, hbar);
    out.convective[i].resize(n);
    out.spin_curl[i].resize(n);
    out.weyl[i].resize(n);
    out.total.v[i].resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double denom = mass * rho[k];
      if (!(rho[k] > 0.0)) {
        out.convective[i][k] = out.spin_curl[i][k] = out.weyl[i][k] = out.total.v[i][k] = 0.0;
        continue;
      }
      const double curl = i == 0 ? dsz_dy[k] : -dsz_dx[k];
      const double axs = i == 0 ? a[1][k] * sd.s[2][k] : -a[0][k] * sd.s[2][k];
      out.convective[i][k] = (f_up[k] + f_dn[k] - e * a[i][k] * rho[k] / c) / denom;
      out.spin_curl[i][k] = curl / denom;
      out.weyl[i][k] = weyl_k * axs / denom;
      out.total.v[i][k] = out.convective[i][k] + out.spin_curl[i][k] + out.weyl[i][k];
    }
  }
  detail::finish(out.total, rho);
  return out;
}

/// Pauli guidance law including the spin term and its Weyl partner.
inline VelocityField velocity_pauli(const SpinorField& psi, const SystemModel& m) {
  return velocity_pauli_parts(psi, m).total;
}

/// v = c psi^dagger sigma_x psi / psi^dagger psi; |v| <= c by construction.
inline VelocityField velocity_dirac(const SpinorField& psi, const SystemModel& m) {
  detail::check_model(m, SystemKind::Dirac1p1, psi.grid);
  const GridSpec& g = psi.grid;
  const double c = m.constants.c;
  VelocityField f{g, 1, {}, {}, psi.time, 0.0};
  const auto rho = born_density(psi);
  f.v[0].resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(rho[k] > 0.0)) {
      f.v[0][k] = 0.0;
      continue;
    }
    const double j = 2.0 * (std::conj(psi.comps[0][k]) * psi.comps[1][k]).real();
    f.v[0][k] = std::clamp(c * j / rho[k], -c, c);
  }
  detail::finish(f, rho);
  return f;
}

inline VelocityField velocity_field(const ComplexScalarField& psi, const SystemModel& m) {
  if (m.kind == SystemKind::TwoParticle1D) return velocity_two_particle(psi, m);
  return velocity_schrodinger(psi, m);
}

inline VelocityField velocity_field(const SpinorField& psi, const SystemModel& m) {
  if (m.kind == SystemKind::Dirac1p1) return velocity_dirac(psi, m);
  return velocity_pauli(psi, m);
}

}  // namespace pilotwave::guidance
