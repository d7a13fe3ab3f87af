#pragma once

#include <array>
#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pilotwave/core/constants.hpp"
#include "pilotwave/core/fields.hpp"
#include "pilotwave/core/gauge_config.hpp"

namespace pilotwave {

enum class SystemKind { Schrodinger1D, TwoParticle1D, Pauli2D, Dirac1p1 };

inline const char* to_string(SystemKind k) {
  switch (k) {
    case SystemKind::Schrodinger1D: return "schrodinger1d";
    case SystemKind::TwoParticle1D: return "two_particle1d";
    case SystemKind::Pauli2D: return "pauli2d";
    case SystemKind::Dirac1p1: return "dirac1p1";
  }
  return "?";
}

/// Everything that defines the Hamiltonian of a run: the system, its grid,
/// constants, masses, couplings and external potentials.
struct SystemModel {
  SystemKind kind = SystemKind::Schrodinger1D;
  GridSpec grid;
  PhysicalConstants constants;
  std::vector<double> masses{1.0};
  Coupling coupling;
  GaugeConfiguration gauge;
  /// Real interaction V(x1, x2, t) between the two particles (TwoParticle1D only).
  std::optional<expr::Expression> interaction;

  static SystemModel schrodinger1d(GridSpec g, Coupling coupling, GaugeConfiguration gauge, double mass = 1.0,
                                   PhysicalConstants pc = {}) {
    SystemModel m{SystemKind::Schrodinger1D, std::move(g), pc, {mass}, std::move(coupling), std::move(gauge), {}};
    m.validate();
    return m;
  }

  static SystemModel two_particle1d(GridSpec g, Coupling coupling, GaugeConfiguration gauge,
                                    std::array<double, 2> masses = {1.0, 1.0}, PhysicalConstants pc = {},
                                    std::optional<expr::Expression> interaction = {}) {
    SystemModel m{SystemKind::TwoParticle1D, std::move(g), pc, {masses[0], masses[1]}, std::move(coupling),
                  std::move(gauge), std::move(interaction)};
    m.validate();
    return m;
  }

  static SystemModel pauli2d(GridSpec g, Coupling coupling, GaugeConfiguration gauge, double mass = 1.0,
                             PhysicalConstants pc = {}) {
    SystemModel m{SystemKind::Pauli2D, std::move(g), pc, {mass}, std::move(coupling), std::move(gauge), {}};
    m.validate();
    return m;
  }

  static SystemModel dirac1p1(GridSpec g, Coupling coupling, GaugeConfiguration gauge, double mass = 1.0,
                              PhysicalConstants pc = {}) {
    SystemModel m{SystemKind::Dirac1p1, std::move(g), pc, {mass}, std::move(coupling), std::move(gauge), {}};
    m.validate();
    return m;
  }

  /// Number of configuration-space axes (1 or 2).
  int config_dim() const { return grid.dim(); }

  /// Number of particles whose positions make up the configuration.
  std::size_t particle_count() const { return kind == SystemKind::TwoParticle1D ? 2 : 1; }

  /// Mass attached to configuration axis j.
  double axis_mass(int axis) const {
    return kind == SystemKind::TwoParticle1D ? masses.at(static_cast<std::size_t>(axis)) : masses.at(0);
  }

  /// Coupling attached to configuration axis j.
  const ParticleCoupling& axis_coupling(int axis) const {
    return kind == SystemKind::TwoParticle1D ? coupling[static_cast<std::size_t>(axis)] : coupling[0];
  }

  void validate() const {
    constants.validate();
    coupling.validate();
    const bool two_d = kind == SystemKind::TwoParticle1D || kind == SystemKind::Pauli2D;
    if (grid.dim() != (two_d ? 2 : 1))
      throw ConfigError(std::string(to_string(kind)) + " requires a " + (two_d ? "2D" : "1D") + " grid");
    const int gauge_dim = kind == SystemKind::Pauli2D ? 2 : 1;
    if (gauge.spatial_dim() != gauge_dim)
      throw ConfigError(std::string(to_string(kind)) + " requires a " + std::to_string(gauge_dim) +
                        "D gauge configuration");
    const std::size_t np = particle_count();
    if (masses.size() != np) throw ConfigError("expected " + std::to_string(np) + " mass value(s)");
    if (coupling.size() != np) throw ConfigError("expected " + std::to_string(np) + " coupling entr(ies)");
    for (double m : masses)
      if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("masses must be positive");
    if (interaction && kind != SystemKind::TwoParticle1D)
      throw ConfigError("an interaction potential needs the two-particle system");
  }
};

/// Gauge fields sampled on the configuration grid at one time.
/// Configuration axis j couples through a[j] with complex charge q[j] = e_Cj / c.
struct SampledPotentials {
  std::array<std::vector<double>, 2> a;
  std::array<cplx, 2> q{};
  std::array<double, 2> mass{1.0, 1.0};
  std::array<bool, 2> a_zero{true, true};
  std::vector<cplx> potential;  ///< e_C phi (+ V) per node
  std::vector<double> magnetic;  ///< B_z per node (Pauli only)
};

inline SampledPotentials sample_potentials(const SystemModel& m, double t) {
  SampledPotentials s;
  const GridSpec& g = m.grid;
  const std::size_t n = g.size();
  const double c = m.constants.c;
  const int d = g.dim();
  s.potential.assign(n, 0.0);
  for (int j = 0; j < d; ++j) {
    s.q[j] = m.axis_coupling(j).complex() / c;
    s.mass[j] = m.axis_mass(j);
    s.a[j].assign(n, 0.0);
  }
  switch (m.kind) {
    case SystemKind::Schrodinger1D:
    case SystemKind::Dirac1p1: {
      const cplx ec = m.coupling[0].complex();
      s.a_zero[0] = m.gauge.a_source(0).is_zero();
      for (std::size_t k = 0; k < n; ++k) {
        const double x = g.coord(0, k);
        if (!s.a_zero[0]) s.a[0][k] = m.gauge.a(0, x, 0.0, t);
        s.potential[k] = ec * m.gauge.phi(x, 0.0, t);
      }
      break;
    }
    case SystemKind::Pauli2D: {
      const cplx ec = m.coupling[0].complex();
      s.a_zero = {m.gauge.a_source(0).is_zero(), m.gauge.a_source(1).is_zero()};
      const ScalarSource b = m.gauge.magnetic_field();
      s.magnetic.assign(n, 0.0);
      const bool b_zero = b.is_zero();
      for (std::size_t k = 0; k < n; ++k) {
        const Point p = g.node(k);
        for (int j = 0; j < 2; ++j)
          if (!s.a_zero[j]) s.a[j][k] = m.gauge.a(j, p[0], p[1], t);
        s.potential[k] = ec * m.gauge.phi(p[0], p[1], t);
        if (!b_zero) s.magnetic[k] = b(p[0], p[1], t);
      }
      break;
    }
    case SystemKind::TwoParticle1D: {
      const std::size_t nx = g.points(0);
      const std::size_t ny = g.points(1);
      const bool az = m.gauge.a_source(0).is_zero();
      s.a_zero = {az, az};
      std::array<std::vector<double>, 2> a1d;
      std::array<std::vector<cplx>, 2> u1d;
      for (int j = 0; j < 2; ++j) {
        const std::size_t nj = g.points(j);
        a1d[j].assign(nj, 0.0);
        u1d[j].assign(nj, 0.0);
        const cplx ec = m.coupling[static_cast<std::size_t>(j)].complex();
        for (std::size_t i = 0; i < nj; ++i) {
          const double x = g.coord(j, i);
          if (!az) a1d[j][i] = m.gauge.a(0, x, 0.0, t);
          u1d[j][i] = ec * m.gauge.phi(x, 0.0, t);
        }
      }
      for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t iy = 0; iy < ny; ++iy) {
          const std::size_t k = ix * ny + iy;
          s.a[0][k] = a1d[0][ix];
          s.a[1][k] = a1d[1][iy];
          s.potential[k] = u1d[0][ix] + u1d[1][iy];
          if (m.interaction) s.potential[k] += (*m.interaction)(g.coord(0, ix), g.coord(1, iy), t);
        }
      }
      break;
    }
  }
  return s;
}

/// Caches sampled potentials for static gauge fields; resamples otherwise.
class PotentialCache {
 public:
  explicit PotentialCache(std::shared_ptr<const SystemModel> m)
      : model_(std::move(m)), dynamic_(model_->gauge.time_dependent()) {
    if (model_->interaction && model_->interaction->depends_on(expr::Var::T)) dynamic_ = true;
    if (!dynamic_) static_ = std::make_shared<const SampledPotentials>(sample_potentials(*model_, 0.0));
  }

  std::shared_ptr<const SampledPotentials> at(double t) const {
    if (!dynamic_) return static_;
    return std::make_shared<const SampledPotentials>(sample_potentials(*model_, t));
  }

  bool time_dependent() const { return dynamic_; }

 private:
  std::shared_ptr<const SystemModel> model_;
  bool dynamic_;
  std::shared_ptr<const SampledPotentials> static_;
};

}  // namespace pilotwave
