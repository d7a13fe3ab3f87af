#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "pilotwave/core/spectral.hpp"

namespace pilotwave {

/// Nodes with |psi|^2 <= kNodeThreshold * max|psi|^2 carry no reliable phase.
inline constexpr double kNodeThreshold = 1e-12;

/// Node mask for a density: 1 where density is below the relative threshold.
inline std::vector<std::uint8_t> node_mask(const std::vector<double>& density,
                                           double rel = kNodeThreshold) {
  const double mx = density.empty() ? 0.0 : *std::max_element(density.begin(), density.end());
  if (!(mx > 0.0)) throw DegenerateFieldError("field is identically zero");
  std::vector<std::uint8_t> m(density.size());
  const double cut = rel * mx;
  for (std::size_t k = 0; k < density.size(); ++k) m[k] = density[k] > cut ? 0 : 1;
  return m;
}

/// psi = R exp(i S / hbar) without an explicit S: the kinetic phase gradient
/// hbar Im(conj(psi) grad psi) / |psi|^2 is single valued.
struct PolarDecomposition {
  GridSpec grid;
  std::vector<double> R;
  std::array<std::vector<double>, 2> grad_s;  ///< per axis; axis 1 empty on 1D grids
  std::vector<std::uint8_t> masked;
};

inline PolarDecomposition polar_decompose(const ComplexScalarField& field, double hbar = 1.0) {
  PolarDecomposition out;
  out.grid = field.grid;
  const std::size_t n = field.grid.size();
  std::vector<double> density(n);
  out.R.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    density[k] = std::norm(field.values[k]);
    out.R[k] = std::abs(field.values[k]);
  }
  out.masked = node_mask(density);
  const Spectrum spec(field.grid, field.values);
  for (int a = 0; a < field.grid.dim(); ++a) {
    const auto d = spec.derivative(a);
    auto& g = out.grad_s[a];
    g.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      if (!out.masked[k]) g[k] = hbar * (std::conj(field.values[k]) * d[k]).imag() / density[k];
  }
  return out;
}

}  // namespace pilotwave
