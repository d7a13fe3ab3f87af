#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "pilotwave/core/spectral.hpp"
#include "pilotwave/dynamics/system.hpp"

namespace pilotwave::dynamics {

/// One Gaussian factor per axis: exp(-(x - center)^2 / 4 width^2 + i momentum x),
/// so `width` is the standard deviation of |psi|^2.
struct GaussianAxis {
  double center = 0.0;
  double width = 1.0;
  double momentum = 0.0;
};

inline cplx gaussian_factor(const GaussianAxis& g, double x) {
  const double u = (x - g.center) / g.width;
  return std::exp(cplx(-0.25 * u * u, g.momentum * x));
}

/// Product of Gaussian factors, one per grid axis, normalized on the grid.
inline ComplexScalarField gaussian_packet(const GridSpec& grid, const std::vector<GaussianAxis>& axes) {
  if (axes.size() != static_cast<std::size_t>(grid.dim()))
    throw ConfigError("gaussian packet needs one axis description per grid axis");
  for (const auto& a : axes)
    if (!(a.width > 0.0)) throw ConfigError("gaussian width must be positive");
  ComplexScalarField psi(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point p = grid.node(k);
    cplx v = 1.0;
    for (int d = 0; d < grid.dim(); ++d) v *= gaussian_factor(axes[static_cast<std::size_t>(d)], p[d]);
    psi.values[k] = v;
  }
  normalize(psi);
  return psi;
}

inline ComplexScalarField gaussian_1d(const GridSpec& grid, double center, double width, double momentum = 0.0) {
  return gaussian_packet(grid, {GaussianAxis{center, width, momentum}});
}

/// Weighted sum of product Gaussians (entangled two-particle states, cat states), normalized.
struct GaussianTerm {
  cplx amplitude = 1.0;
  std::vector<GaussianAxis> axes;
};

inline ComplexScalarField gaussian_superposition(const GridSpec& grid, const std::vector<GaussianTerm>& terms) {
  if (terms.empty()) throw ConfigError("superposition needs at least one term");
  ComplexScalarField psi(grid);
  for (const auto& term : terms) {
    if (term.axes.size() != static_cast<std::size_t>(grid.dim()))
      throw ConfigError("gaussian term needs one axis description per grid axis");
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Point p = grid.node(k);
      cplx v = term.amplitude;
      for (int d = 0; d < grid.dim(); ++d) v *= gaussian_factor(term.axes[static_cast<std::size_t>(d)], p[d]);
      psi.values[k] += v;
    }
  }
  normalize(psi);
  return psi;
}

/// Periodic plane wave exp(i (n_x kx x + n_y ky y)) with integer mode numbers, normalized.
inline ComplexScalarField plane_wave(const GridSpec& grid, std::array<int, 2> modes) {
  ComplexScalarField psi(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point p = grid.node(k);
    double ph = 0.0;
    for (int d = 0; d < grid.dim(); ++d)
      ph += 2.0 * std::numbers::pi * modes[static_cast<std::size_t>(d)] * (p[d] - grid.lower(d)) / grid.length(d);
    psi.values[k] = std::polar(1.0, ph);
  }
  normalize(psi);
  return psi;
}

struct Mode {
  std::array<int, 2> n{0, 0};
  cplx amplitude = 1.0;
};

/// Sum of periodic plane-wave modes, normalized.
inline ComplexScalarField mode_superposition(const GridSpec& grid, const std::vector<Mode>& modes) {
  if (modes.empty()) throw ConfigError("mode superposition needs at least one mode");
  ComplexScalarField psi(grid);
  for (const auto& m : modes) {
    const auto pw = plane_wave(grid, m.n);
    for (std::size_t k = 0; k < grid.size(); ++k) psi.values[k] += m.amplitude * pw.values[k];
  }
  normalize(psi);
  return psi;
}

/// Every mode with |n_x|, |n_y| <= max_mode, unit modulus and a random phase.
inline std::vector<Mode> random_phase_modes(int dim, int max_mode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<Mode> out;
  const int ny = dim == 2 ? max_mode : 0;
  for (int i = -max_mode; i <= max_mode; ++i)
    for (int j = -ny; j <= ny; ++j) out.push_back(Mode{{i, j}, std::polar(1.0, phase(rng))});
  return out;
}

/// Scalar profile times a constant two-component spinor (a, b), normalized.
inline SpinorField spinor_from_scalar(const ComplexScalarField& f, cplx up, cplx down) {
  SpinorField s(f.grid, f.time);
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    s.comps[0][k] = up * f.values[k];
    s.comps[1][k] = down * f.values[k];
  }
  normalize(s);
  return s;
}

/// Positive- or negative-energy eigenvector of the free 1+1D Dirac Hamiltonian
/// sigma_x c p + sigma_z m c^2 at momentum p = hbar k (unnormalized).
inline std::array<cplx, 2> dirac_eigenvector(double k, const PhysicalConstants& pc, double mass, bool positive) {
  const double mc2 = mass * pc.c * pc.c;
  const double cp = pc.c * pc.hbar * k;
  const double e = std::hypot(cp, mc2);
  if (positive) return {mc2 + e, cp};
  return {-cp, mc2 + e};
}

/// Free Dirac plane wave with integer mode number n on a 1D grid.
inline SpinorField dirac_plane_wave(const GridSpec& grid, const PhysicalConstants& pc, double mass, int n,
                                    bool positive = true) {
  const auto pw = plane_wave(grid, {n, 0});
  const double k = 2.0 * std::numbers::pi * n / grid.length(0);
  const auto v = dirac_eigenvector(k, pc, mass, positive);
  return spinor_from_scalar(pw, v[0], v[1]);
}

/// Gaussian packet projected mode by mode onto the free positive-energy branch.
inline SpinorField dirac_positive_energy_packet(const GridSpec& grid, const PhysicalConstants& pc, double mass,
                                                const GaussianAxis& g) {
  if (grid.dim() != 1) throw ConfigError("dirac packet needs a 1D grid");
  const auto f = gaussian_packet(grid, {g});
  const Spectrum spec(grid, f.values);
  const auto& c = spec.coefficients();
  const std::size_t n = grid.size();
  std::array<std::vector<cplx>, 2> hat{std::vector<cplx>(n), std::vector<cplx>(n)};
  for (std::size_t j = 0; j < n; ++j) {
    auto v = dirac_eigenvector(wavenumber(j, n, grid.length(0)), pc, mass, true);
    const double nv = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
    hat[0][j] = c[j] * v[0] / nv;
    hat[1][j] = c[j] * v[1] / nv;
  }
  SpinorField s(grid);
  for (int a = 0; a < 2; ++a) {
    pilotwave::detail::workspace_for(grid).backward(hat[a], s.comps[a]);
    for (auto& z : s.comps[a]) z /= static_cast<double>(n);
  }
  normalize(s);
  return s;
}

}  // namespace pilotwave::dynamics
