#pragma once

#include <array>
#include <string>
#include <variant>
#include <vector>

#include "pilotwave/core/interpolate.hpp"
#include "pilotwave/core/spectral.hpp"
#include "pilotwave/expr/expression.hpp"

namespace pilotwave {

/// Static real samples on a periodic grid, evaluated by interpolation.
struct TabulatedFunction {
  GridSpec grid;
  std::vector<double> values;
};

/// A real function of (x, y, t): either a parsed expression or a table.
class ScalarSource {
 public:
  ScalarSource() : impl_(expr::Expression::constant(0.0)) {}
  ScalarSource(expr::Expression e) : impl_(std::move(e)) {}  // NOLINT(implicit)
  ScalarSource(TabulatedFunction t) : impl_(std::move(t)) {  // NOLINT(implicit)
    if (std::get<TabulatedFunction>(impl_).values.size() != std::get<TabulatedFunction>(impl_).grid.size())
      throw ConfigError("tabulated function size does not match its grid");
  }

  static ScalarSource parse(const std::string& src) { return ScalarSource(expr::Expression::parse(src)); }

  double operator()(double x, double y, double t) const {
    if (const auto* e = std::get_if<expr::Expression>(&impl_)) return (*e)(x, y, t);
    const auto& tab = std::get<TabulatedFunction>(impl_);
    return interpolate<double>(tab.grid, tab.values, Point{x, y});
  }

  ScalarSource derivative(expr::Var v) const {
    if (const auto* e = std::get_if<expr::Expression>(&impl_)) return ScalarSource(e->derivative(v));
    const auto& tab = std::get<TabulatedFunction>(impl_);
    if (v == expr::Var::T) return ScalarSource(expr::Expression::constant(0.0));
    const int axis = v == expr::Var::X ? 0 : 1;
    if (axis >= tab.grid.dim()) return ScalarSource(expr::Expression::constant(0.0));
    return ScalarSource(TabulatedFunction{tab.grid, spectral_derivative_real(tab.grid, tab.values, axis)});
  }

  bool time_dependent() const {
    const auto* e = std::get_if<expr::Expression>(&impl_);
    return e != nullptr && e->depends_on(expr::Var::T);
  }

  bool is_zero() const {
    const auto* e = std::get_if<expr::Expression>(&impl_);
    return e != nullptr && e->is_zero();
  }

  bool is_expression() const { return std::holds_alternative<expr::Expression>(impl_); }
  const expr::Expression& expression() const { return std::get<expr::Expression>(impl_); }

  std::string describe() const {
    if (const auto* e = std::get_if<expr::Expression>(&impl_)) return e->to_string();
    return "table(" + std::get<TabulatedFunction>(impl_).grid.describe() + ")";
  }

  friend ScalarSource operator+(const ScalarSource& a, const ScalarSource& b) {
    return combine(a, b, 1.0);
  }
  friend ScalarSource operator-(const ScalarSource& a, const ScalarSource& b) {
    return combine(a, b, -1.0);
  }
  friend ScalarSource operator*(double k, const ScalarSource& a) {
    if (const auto* e = std::get_if<expr::Expression>(&a.impl_)) return ScalarSource(k * *e);
    auto tab = std::get<TabulatedFunction>(a.impl_);
    for (auto& v : tab.values) v *= k;
    return ScalarSource(std::move(tab));
  }

 private:
  static ScalarSource combine(const ScalarSource& a, const ScalarSource& b, double sign) {
    const auto* ea = std::get_if<expr::Expression>(&a.impl_);
    const auto* eb = std::get_if<expr::Expression>(&b.impl_);
    if (ea && eb) return ScalarSource(sign > 0 ? *ea + *eb : *ea - *eb);
    if (a.time_dependent() || b.time_dependent())
      throw ConfigError("cannot combine a time-dependent expression with a static table");
    const GridSpec& g = ea ? std::get<TabulatedFunction>(b.impl_).grid : std::get<TabulatedFunction>(a.impl_).grid;
    TabulatedFunction out{g, std::vector<double>(g.size())};
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point p = g.node(k);
      out.values[k] = a(p[0], p[1], 0.0) + sign * b(p[0], p[1], 0.0);
    }
    return ScalarSource(std::move(out));
  }

  std::variant<expr::Expression, TabulatedFunction> impl_;
};

/// Scalar potential phi and vector potential A on physical space of
/// dimension 1 or 2, with A^mu = (phi, A).
class GaugeConfiguration {
 public:
  GaugeConfiguration() = default;
  GaugeConfiguration(int spatial_dim, ScalarSource phi, std::vector<ScalarSource> a)
      : dim_(spatial_dim), phi_(std::move(phi)) {
    if (dim_ != 1 && dim_ != 2) throw ConfigError("gauge configuration dimension must be 1 or 2");
    if (a.empty()) a.resize(static_cast<std::size_t>(dim_));
    if (static_cast<int>(a.size()) != dim_)
      throw ConfigError("vector potential needs " + std::to_string(dim_) + " component(s)");
    for (int i = 0; i < dim_; ++i) a_[i] = std::move(a[i]);
  }

  static GaugeConfiguration free(int spatial_dim) { return GaugeConfiguration(spatial_dim, {}, {}); }

  static GaugeConfiguration parse(int spatial_dim, const std::string& phi, const std::vector<std::string>& a) {
    std::vector<ScalarSource> comps;
    for (const auto& s : a) comps.push_back(ScalarSource::parse(s));
    return GaugeConfiguration(spatial_dim, ScalarSource::parse(phi), std::move(comps));
  }

  int spatial_dim() const { return dim_; }
  double phi(double x, double y, double t) const { return phi_(x, y, t); }
  double a(int i, double x, double y, double t) const { return a_[i](x, y, t); }

  const ScalarSource& phi_source() const { return phi_; }
  const ScalarSource& a_source(int i) const { return a_[i]; }

  bool vector_potential_is_zero() const {
    for (int i = 0; i < dim_; ++i)
      if (!a_[i].is_zero()) return false;
    return true;
  }

  bool time_dependent() const {
    if (phi_.time_dependent()) return true;
    for (int i = 0; i < dim_; ++i)
      if (a_[i].time_dependent()) return true;
    return false;
  }

  /// z-component of curl A; identically zero in one dimension.
  ScalarSource magnetic_field() const {
    if (dim_ == 1) return {};
    return a_[1].derivative(expr::Var::X) - a_[0].derivative(expr::Var::Y);
  }

  /// Divergence of A.
  ScalarSource divergence() const {
    ScalarSource d = a_[0].derivative(expr::Var::X);
    if (dim_ == 2) d = d + a_[1].derivative(expr::Var::Y);
    return d;
  }

 private:
  int dim_ = 1;
  ScalarSource phi_;
  std::array<ScalarSource, 2> a_;
};

}  // namespace pilotwave
