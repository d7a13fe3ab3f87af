#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <concepts>
#include <vector>

#include "pilotwave/core/constants.hpp"
#include "pilotwave/core/grid.hpp"

namespace pilotwave {

/// Real samples on a grid.
struct RealField {
  GridSpec grid;
  std::vector<double> values;

  RealField() = default;
  explicit RealField(const GridSpec& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  RealField(const GridSpec& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw ConfigError("real field size does not match grid");
  }
};

/// Complex amplitude psi(x, t) sampled on a grid.
struct ComplexScalarField {
  GridSpec grid;
  std::vector<cplx> values;
  double time = 0.0;

  ComplexScalarField() = default;
  explicit ComplexScalarField(const GridSpec& g, double t = 0.0) : grid(g), values(g.size()), time(t) {}
  ComplexScalarField(const GridSpec& g, std::vector<cplx> v, double t = 0.0)
      : grid(g), values(std::move(v)), time(t) {
    if (values.size() != grid.size()) throw ConfigError("field size does not match grid");
  }

  static constexpr int components = 1;
  std::vector<cplx>& component(int) { return values; }
  const std::vector<cplx>& component(int) const { return values; }
};

/// Two complex components per node: Pauli (psi_+, psi_-) in the sigma_z
/// basis, or the two components of the 1+1D Dirac spinor.
struct SpinorField {
  GridSpec grid;
  std::array<std::vector<cplx>, 2> comps;
  double time = 0.0;

  SpinorField() = default;
  explicit SpinorField(const GridSpec& g, double t = 0.0)
      : grid(g), comps{std::vector<cplx>(g.size()), std::vector<cplx>(g.size())}, time(t) {}
  SpinorField(const GridSpec& g, std::vector<cplx> up, std::vector<cplx> down, double t = 0.0)
      : grid(g), comps{std::move(up), std::move(down)}, time(t) {
    if (comps[0].size() != grid.size() || comps[1].size() != grid.size())
      throw ConfigError("spinor component size does not match grid");
  }

  static constexpr int components = 2;
  std::vector<cplx>& component(int a) { return comps[a]; }
  const std::vector<cplx>& component(int a) const { return comps[a]; }
};

template <class S>
concept WaveState = requires(S s, const S cs) {
  { cs.grid } -> std::convertible_to<GridSpec>;
  { s.component(0) } -> std::same_as<std::vector<cplx>&>;
  { S::components } -> std::convertible_to<int>;
};

/// |psi|^2 summed over components, per node.
template <WaveState S>
std::vector<double> born_density(const S& s) {
  std::vector<double> rho(s.grid.size(), 0.0);
  for (int a = 0; a < S::components; ++a) {
    const auto& c = s.component(a);
    for (std::size_t k = 0; k < rho.size(); ++k) rho[k] += std::norm(c[k]);
  }
  return rho;
}

/// Riemann sum of |psi|^2 times the cell volume.
template <WaveState S>
double born_norm(const S& s) {
  double acc = 0.0;
  for (int a = 0; a < S::components; ++a)
    for (const auto& z : s.component(a)) acc += std::norm(z);
  return acc * s.grid.cell_volume();
}

template <WaveState S>
bool all_finite(const S& s) {
  for (int a = 0; a < S::components; ++a)
    for (const auto& z : s.component(a))
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

/// y += a * x, componentwise.
template <WaveState S>
void add_scaled(S& y, cplx a, const S& x) {
  for (int c = 0; c < S::components; ++c) {
    auto& yc = y.component(c);
    const auto& xc = x.component(c);
    for (std::size_t k = 0; k < yc.size(); ++k) yc[k] += a * xc[k];
  }
}

template <WaveState S>
void scale(S& y, cplx a) {
  for (int c = 0; c < S::components; ++c)
    for (auto& z : y.component(c)) z *= a;
}

/// Rescale so that born_norm(s) == 1 (up to rounding).
template <WaveState S>
void normalize(S& s) {
  const double n = born_norm(s);
  if (!(n > 0.0)) throw DegenerateFieldError("cannot normalize an all-zero field");
  scale(s, cplx(1.0 / std::sqrt(n), 0.0));
}

/// Discrete inner product sum conj(a) b dV.
template <WaveState S>
cplx inner(const S& a, const S& b) {
  cplx acc = 0.0;
  for (int c = 0; c < S::components; ++c) {
    const auto& ac = a.component(c);
    const auto& bc = b.component(c);
    for (std::size_t k = 0; k < ac.size(); ++k) acc += std::conj(ac[k]) * bc[k];
  }
  return acc * a.grid.cell_volume();
}

}  // namespace pilotwave
