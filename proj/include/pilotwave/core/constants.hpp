#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "pilotwave/core/errors.hpp"

namespace pilotwave {

using cplx = std::complex<double>;

/// hbar and c, both 1 by default.
struct PhysicalConstants {
  double hbar = 1.0;
  double c = 1.0;

  void validate() const {
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw ConfigError("hbar must be positive");
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("c must be positive");
  }
};

/// Complex gauge coupling e_C = e + i e_I of one particle.
struct ParticleCoupling {
  double e = 0.0;    ///< charge
  double e_I = 0.0;  ///< imaginary part of the coupling

  cplx complex() const { return {e, e_I}; }
  bool hermitian() const { return e_I == 0.0; }
};

/// Per-particle couplings. Single-particle systems hold one entry.
struct Coupling {
  std::vector<ParticleCoupling> particles{ParticleCoupling{}};

  Coupling() = default;
  Coupling(double e, double e_I) : particles{ParticleCoupling{e, e_I}} {}
  explicit Coupling(std::vector<ParticleCoupling> p) : particles(std::move(p)) {}

  const ParticleCoupling& operator[](std::size_t j) const { return particles.at(j); }
  std::size_t size() const { return particles.size(); }

  bool hermitian() const {
    for (const auto& p : particles)
      if (!p.hermitian()) return false;
    return true;
  }

  void validate() const {
    if (particles.empty()) throw ConfigError("coupling list is empty");
    for (const auto& p : particles)
      if (!std::isfinite(p.e) || !std::isfinite(p.e_I))
        throw ConfigError("coupling values must be finite");
  }
};

}  // namespace pilotwave
