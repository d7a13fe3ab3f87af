#pragma once

#include <string>

#include "pilotwave/dynamics/system.hpp"

namespace pilotwave::weylscale {

/// Sign and gauge conventions behind every scale factor this library reports.
struct ScaleConvention {
  std::string metric = "mostly-negative (+,-,-,-)";
  std::string line_integral = "A^mu dx_mu = phi c dt - A.dx";
  std::string scale_factor = "ln one[C] = (e_I / hbar c) * integral_C A^mu dx_mu";
  std::string reference_gauge = "one(t0) = 1 (Omega_0 = 1); input states are taken to be in this gauge";
  std::string increment_rule = "midpoint";
  double ln_one_t0 = 0.0;
};

/// ln one' = ln one + (e_I / hbar c)(phi c dt - A.dx) evaluated at the midpoint of
/// the segment (q, t) -> (q2, t2). q and q2 are unwrapped configuration points.
/// Two-particle runs add one such increment per particle.
inline double accumulate_log_scale_step(double ln_one, const SystemModel& m, const Point& q, const Point& q2,
                                        double t, double t2) {
  const double hbar = m.constants.hbar;
  const double c = m.constants.c;
  const double dt = t2 - t;
  const double tm = 0.5 * (t + t2);
  const auto& gauge = m.gauge;
  auto increment = [&](const ParticleCoupling& pc, double x, double y, double dx, double dy, bool planar) {
    if (pc.e_I == 0.0) return 0.0;
    const double k = pc.e_I / (hbar * c);
    double s = gauge.phi(x, y, tm) * c * dt;
    if (!gauge.a_source(0).is_zero()) s -= gauge.a(0, x, y, tm) * dx;
    if (planar && !gauge.a_source(1).is_zero()) s -= gauge.a(1, x, y, tm) * dy;
    return k * s;
  };
  const GridSpec& g = m.grid;
  switch (m.kind) {
    case SystemKind::Schrodinger1D:
    case SystemKind::Dirac1p1: {
      const double xm = g.wrap(0, 0.5 * (q[0] + q2[0]));
      return ln_one + increment(m.coupling[0], xm, 0.0, q2[0] - q[0], 0.0, false);
    }
    case SystemKind::Pauli2D: {
      const double xm = g.wrap(0, 0.5 * (q[0] + q2[0]));
      const double ym = g.wrap(1, 0.5 * (q[1] + q2[1]));
      return ln_one + increment(m.coupling[0], xm, ym, q2[0] - q[0], q2[1] - q[1], true);
    }
    case SystemKind::TwoParticle1D: {
      double acc = 0.0;
      for (int j = 0; j < 2; ++j) {
        const double xm = g.wrap(j, 0.5 * (q[j] + q2[j]));
        acc += increment(m.coupling[static_cast<std::size_t>(j)], xm, 0.0, q2[j] - q[j], 0.0, false);
      }
      return ln_one + acc;
    }
  }
  return ln_one;
}

}  // namespace pilotwave::weylscale
