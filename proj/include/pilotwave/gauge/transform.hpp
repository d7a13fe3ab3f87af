#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "pilotwave/dynamics/system.hpp"

namespace pilotwave::gauge {

/// A real gauge function lambda(x, y, t) with its partial derivatives.
class GaugeFunction {
 public:
  GaugeFunction() = default;
  explicit GaugeFunction(ScalarSource lambda)
      : lambda_(std::move(lambda)),
        dx_(lambda_.derivative(expr::Var::X)),
        dy_(lambda_.derivative(expr::Var::Y)),
        dt_(lambda_.derivative(expr::Var::T)) {}

  static GaugeFunction parse(const std::string& src) { return GaugeFunction(ScalarSource::parse(src)); }

  static GaugeFunction constant(double value) { return GaugeFunction(ScalarSource(expr::Expression::constant(value))); }

  /// amplitude * sin(2 pi (x - lower) / length), periodic on [lower, lower + length).
  static GaugeFunction spatial_sine(double amplitude, double lower, double length) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.17g*sin(%.17g*(x-(%.17g)))", amplitude, 2.0 * std::numbers::pi / length, lower);
    return parse(buf);
  }

  double operator()(double x, double y, double t) const { return lambda_(x, y, t); }
  double operator()(const Point& p, double t) const { return lambda_(p[0], p[1], t); }

  const ScalarSource& source() const { return lambda_; }
  const ScalarSource& dx() const { return dx_; }
  const ScalarSource& dy() const { return dy_; }
  const ScalarSource& dt() const { return dt_; }

  bool is_zero() const { return lambda_.is_zero(); }

  friend GaugeFunction operator+(const GaugeFunction& a, const GaugeFunction& b) {
    return GaugeFunction(a.lambda_ + b.lambda_);
  }
  friend GaugeFunction operator-(const GaugeFunction& a) { return GaugeFunction(-1.0 * a.lambda_); }

 private:
  ScalarSource lambda_;
  ScalarSource dx_, dy_, dt_;
};

namespace detail {

/// Physical-space grid the gauge fields live on: the configuration grid, or
/// one axis of it for two particles on a line.
inline GridSpec field_grid(const SystemModel& m) {
  if (m.kind != SystemKind::TwoParticle1D) return m.grid;
  return GridSpec::line(m.grid.points(0), m.grid.lower(0), m.grid.upper(0));
}

}  // namespace detail

/// Throws ConfigError unless lambda and its gradient agree across every periodic boundary.
inline void require_periodic(const GaugeFunction& lambda, const SystemModel& m, double t0 = 0.0) {
  const GridSpec g = detail::field_grid(m);
  const int dim = g.dim();
  std::vector<double> probe_t{t0, t0 + 0.37, t0 + 1.91};
  constexpr int kSamples = 17;
  for (double t : probe_t)
    for (int axis = 0; axis < dim; ++axis)
      for (int s = 0; s < kSamples; ++s) {
        Point a{g.lower(0), dim == 2 ? g.lower(1) : 0.0};
        if (dim == 2) {
          const int other = 1 - axis;
          a[other] = g.lower(other) + g.length(other) * s / kSamples;
        } else if (s > 0) {
          break;
        }
        Point b = a;
        b[axis] = g.upper(axis);
        auto mismatch = [&](const ScalarSource& f) {
          const double fa = f(a[0], a[1], t), fb = f(b[0], b[1], t);
          return std::abs(fa - fb) > 1e-9 * (1.0 + std::abs(fa) + std::abs(fb));
        };
        if (mismatch(lambda.source()) || mismatch(lambda.dx()) || (dim == 2 && mismatch(lambda.dy())))
          throw ConfigError("gauge function is not periodic on the grid");
      }
}

/// Gauge fields after lambda: A' = A + grad lambda, phi' = phi - d lambda / d(ct).
inline GaugeConfiguration transform_gauge(const GaugeConfiguration& gc, const GaugeFunction& lambda, double c) {
  const int dim = gc.spatial_dim();
  const ScalarSource phi = gc.phi_source() - (1.0 / c) * lambda.dt();
  std::vector<ScalarSource> a{gc.a_source(0) + lambda.dx()};
  if (dim == 2) a.push_back(gc.a_source(1) + lambda.dy());
  return GaugeConfiguration(dim, phi, std::move(a));
}

/// Complex exponent i e_C lambda / (hbar c) per configuration node at time t,
/// summed over particles for two particles on a line.
inline std::vector<cplx> gauge_exponent(const SystemModel& m, const GaugeFunction& lambda, double t) {
  const GridSpec& g = m.grid;
  const double hc = m.constants.hbar * m.constants.c;
  const cplx i(0.0, 1.0);
  std::vector<cplx> out(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point p = g.node(k);
    if (m.kind == SystemKind::TwoParticle1D) {
      out[k] = i * (m.coupling[0].complex() * lambda(p[0], 0.0, t) + m.coupling[1].complex() * lambda(p[1], 0.0, t)) / hc;
    } else {
      out[k] = i * m.coupling[0].complex() * lambda(p, t) / hc;
    }
  }
  return out;
}

/// ln one at t0 in the transformed gauge: -sum_j e_Ij lambda(x_j, t0) / (hbar c).
inline double initial_log_scale(const SystemModel& m, const GaugeFunction& lambda, const Point& q, double t0) {
  const double hc = m.constants.hbar * m.constants.c;
  if (m.kind == SystemKind::TwoParticle1D)
    return -(m.coupling[0].e_I * lambda(q[0], 0.0, t0) + m.coupling[1].e_I * lambda(q[1], 0.0, t0)) / hc;
  return -m.coupling[0].e_I * lambda(q, t0) / hc;
}

/// The model with transformed gauge fields; everything else unchanged.
inline SystemModel transform_model(const SystemModel& m, const GaugeFunction& lambda) {
  SystemModel out = m;
  out.gauge = transform_gauge(m.gauge, lambda, m.constants.c);
  out.validate();
  return out;
}

template <class State>
struct Transformed {
  State state;
  SystemModel model;
};

inline void apply_factor(ComplexScalarField& psi, const std::vector<cplx>& ex) {
  for (std::size_t k = 0; k < ex.size(); ++k) psi.values[k] *= std::exp(ex[k]);
}

inline void apply_factor(SpinorField& psi, const std::vector<cplx>& ex) {
  for (std::size_t k = 0; k < ex.size(); ++k) {
    const cplx f = std::exp(ex[k]);
    psi.comps[0][k] *= f;
    psi.comps[1][k] *= f;
  }
}

/// psi' = psi exp(i e_C lambda / hbar c) at psi.time, with the matching gauge fields.
template <class State>
Transformed<State> apply_gauge_transform(const State& psi, const SystemModel& m, const GaugeFunction& lambda) {
  require_periodic(lambda, m, psi.time);
  if (!(psi.grid == m.grid)) throw ConfigError("state grid does not match the system grid");
  Transformed<State> out{psi, transform_model(m, lambda)};
  apply_factor(out.state, gauge_exponent(m, lambda, psi.time));
  return out;
}

/// f * exp(-omega e_I lambda / hbar c) for a field of Weyl weight omega.
inline RealField weyl_rescale(const RealField& f, const GaugeFunction& lambda, int omega, const ParticleCoupling& pc,
                              const PhysicalConstants& k = {}, double t = 0.0) {
  RealField out = f;
  if (omega == 0 || pc.e_I == 0.0) return out;
  const double s = -static_cast<double>(omega) * pc.e_I / (k.hbar * k.c);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= std::exp(s * lambda(f.grid.node(i), t));
  return out;
}

}  // namespace pilotwave::gauge
