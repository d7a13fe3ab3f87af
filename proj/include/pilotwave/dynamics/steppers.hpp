#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "pilotwave/dynamics/hamiltonian.hpp"

namespace pilotwave::dynamics {

/// RK4 refuses steps with dt * (spectral radius of H / hbar) above this bound;
/// the classic scheme is stable on the imaginary axis up to 2 sqrt(2).
inline constexpr double kRk4StabilityLimit = 2.0 * std::numbers::sqrt2;

/// Classic four-stage step of d psi / dt = -i H psi / hbar.
template <class H>
typename H::state_type step_rk4_spectral(const typename H::state_type& psi, const H& h, double dt) {
  if (!(dt > 0.0)) throw StepperError("rk4 step needs dt > 0");
  const double t = psi.time;
  const double rho = h.spectral_radius(t);
  if (!std::isfinite(rho)) throw DivergenceError(0, t, "non-finite potential");
  if (!(dt * rho <= kRk4StabilityLimit))
    throw StepperError("rk4 step dt = " + std::to_string(dt) + " exceeds the stability bound " +
                       std::to_string(kRk4StabilityLimit / rho));
  const double hbar = h.model().constants.hbar;
  const cplx f = cplx(0.0, -1.0 / hbar);
  using S = typename H::state_type;

  auto rhs = [&](const S& s, double tt) {
    S k = h.apply(s, tt);
    scale(k, f);
    return k;
  };
  auto shifted = [&](const S& k, double a) {
    S y = psi;
    add_scaled(y, cplx(a, 0.0), k);
    return y;
  };
  const S k1 = rhs(psi, t);
  const S k2 = rhs(shifted(k1, dt / 2), t + dt / 2);
  const S k3 = rhs(shifted(k2, dt / 2), t + dt / 2);
  const S k4 = rhs(shifted(k3, dt), t + dt);
  S out = psi;
  add_scaled(out, cplx(dt / 6, 0.0), k1);
  add_scaled(out, cplx(dt / 3, 0.0), k2);
  add_scaled(out, cplx(dt / 3, 0.0), k3);
  add_scaled(out, cplx(dt / 6, 0.0), k4);
  out.time = t + dt;
  return out;
}

namespace detail {

/// Solves the cyclic tridiagonal system
///   lo[k] x[k-1] + d[k] x[k] + up[k] x[k+1] = r[k]   (indices mod n)
/// by Sherman-Morrison on top of the Thomas algorithm.
inline std::vector<cplx> solve_cyclic_tridiagonal(const std::vector<cplx>& lo, const std::vector<cplx>& d,
                                                  const std::vector<cplx>& up, const std::vector<cplx>& r) {
  const std::size_t n = d.size();
  const cplx alpha = up[n - 1];  // entry (n-1, 0)
  const cplx beta = lo[0];       // entry (0, n-1)
  const cplx gamma = -d[0];
  std::vector<cplx> bb(d);
  bb[0] = d[0] - gamma;
  bb[n - 1] = d[n - 1] - alpha * beta / gamma;

  auto thomas = [&](const std::vector<cplx>& rhs) {
    std::vector<cplx> c(n), x(n);
    cplx piv = bb[0];
    if (!std::isfinite(std::abs(piv))) throw DivergenceError(0, 0.0, "non-finite banded system");
    if (std::abs(piv) == 0.0) throw StepperError("singular banded system");
    c[0] = up[0] / piv;
    x[0] = rhs[0] / piv;
    for (std::size_t k = 1; k < n; ++k) {
      piv = bb[k] - lo[k] * c[k - 1];
      if (std::abs(piv) == 0.0) throw StepperError("singular banded system");
      c[k] = k + 1 < n ? up[k] / piv : cplx(0.0);
      x[k] = (rhs[k] - lo[k] * x[k - 1]) / piv;
    }
    for (std::size_t k = n - 1; k-- > 0;) x[k] -= c[k] * x[k + 1];
    return x;
  };

  const auto y = thomas(r);
  std::vector<cplx> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = alpha;
  const auto z = thomas(u);
  const cplx num = y[0] + beta * y[n - 1] / gamma;
  const cplx den = 1.0 + z[0] + beta * z[n - 1] / gamma;
  if (std::abs(den) == 0.0) throw StepperError("singular banded system");
  const cplx fac = num / den;
  std::vector<cplx> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = y[k] - fac * z[k];
  return x;
}

}  // namespace detail

/// Crank-Nicolson for Schrodinger1D with second-order central differences:
///   (1 + i dt H / 2 hbar) psi_{n+1} = (1 - i dt H / 2 hbar) psi_n,
/// H sampled at the midpoint time.
class CrankNicolson1D {
 public:
  explicit CrankNicolson1D(SystemModel model) : h_(std::move(model)) {
    if (h_.model().kind != SystemKind::Schrodinger1D)
      throw ConfigError("Crank-Nicolson stepper supports schrodinger1d only");
  }

  const SystemModel& model() const { return h_.model(); }

  /// The banded (finite-difference) Hamiltonian: H psi = lo psi_{k-1} + d psi_k + up psi_{k+1}.
  struct Bands {
    std::vector<cplx> lo, d, up;
  };

  Bands bands(double t) const {
    const auto p = h_.potentials(t);
    const auto& m = h_.model();
    const double hbar = m.constants.hbar;
    const double dx = m.grid.spacing(0);
    const std::size_t n = m.grid.size();
    const double mass = p->mass[0];
    const cplx q = p->q[0];
    const auto& a = p->a[0];
    const double kin = hbar * hbar / (2.0 * mass * dx * dx);
    const cplx cross = cplx(0.0, hbar) * q / (2.0 * mass * 2.0 * dx);
    Bands b{std::vector<cplx>(n), std::vector<cplx>(n), std::vector<cplx>(n)};
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t kp = (k + 1) % n;
      const std::size_t km = (k + n - 1) % n;
      b.d[k] = 2.0 * kin + q * q * a[k] * a[k] / (2.0 * mass) + p->potential[k];
      b.up[k] = -kin + cross * (a[kp] + a[k]);
      b.lo[k] = -kin - cross * (a[km] + a[k]);
    }
    return b;
  }

  /// Banded H applied to psi (for consistency checks).
  ComplexScalarField apply(const ComplexScalarField& psi, double t) const {
    detail::check_grid(h_.model(), psi.grid);
    const Bands b = bands(t);
    const std::size_t n = psi.values.size();
    ComplexScalarField out(psi.grid, psi.time);
    for (std::size_t k = 0; k < n; ++k)
      out.values[k] = b.lo[k] * psi.values[(k + n - 1) % n] + b.d[k] * psi.values[k] +
                      b.up[k] * psi.values[(k + 1) % n];
    return out;
  }

  ComplexScalarField step(const ComplexScalarField& psi, double dt) const {
    if (!(dt > 0.0)) throw StepperError("Crank-Nicolson step needs dt > 0");
    detail::check_grid(h_.model(), psi.grid);
    const Bands b = bands(psi.time + dt / 2);
    const std::size_t n = psi.values.size();
    const cplx f = cplx(0.0, dt / (2.0 * h_.model().constants.hbar));
    std::vector<cplx> lo(n), d(n), up(n), r(n);
    for (std::size_t k = 0; k < n; ++k) {
      const cplx hpsi = b.lo[k] * psi.values[(k + n - 1) % n] + b.d[k] * psi.values[k] +
                        b.up[k] * psi.values[(k + 1) % n];
      r[k] = psi.values[k] - f * hpsi;
      lo[k] = f * b.lo[k];
      d[k] = 1.0 + f * b.d[k];
      up[k] = f * b.up[k];
    }
    return {psi.grid, detail::solve_cyclic_tridiagonal(lo, d, up, r), psi.time + dt};
  }

 private:
  ScalarHamiltonian h_;
};

inline ComplexScalarField step_crank_nicolson_1d(const ComplexScalarField& psi, const CrankNicolson1D& cn,
                                                 double dt) {
  return cn.step(psi, dt);
}

/// Explicit RK4 with the spectral Hamiltonian as a stepper object.
template <class H>
class Rk4Stepper {
 public:
  using state_type = typename H::state_type;
  explicit Rk4Stepper(H h) : h_(std::move(h)) {}
  explicit Rk4Stepper(SystemModel model) : h_(std::move(model)) {}

  const SystemModel& model() const { return h_.model(); }
  const H& hamiltonian() const { return h_; }
  state_type step(const state_type& psi, double dt) const { return step_rk4_spectral(psi, h_, dt); }

  /// Largest dt the stability guard accepts at time t.
  double max_stable_dt(double t) const { return kRk4StabilityLimit / h_.spectral_radius(t); }

 private:
  H h_;
};

}  // namespace pilotwave::dynamics
