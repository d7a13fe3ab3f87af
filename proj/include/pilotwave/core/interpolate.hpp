#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pilotwave/core/fields.hpp"

namespace pilotwave {

/// Number of nodes per axis in the local periodic Lagrange stencil.
/// Cubic is the classic 4-point rule; wider stencils trade cost for accuracy.
enum class InterpolationOrder : int { Cubic = 4, Quintic = 6, Septic = 8 };

/// Node indices and Lagrange weights along one axis.
struct AxisStencil {
  std::array<std::size_t, 8> index{};
  std::array<double, 8> weight{};
  int width = 0;
  bool on_node = false;  ///< query coincides with node index[0]
};

inline AxisStencil axis_stencil(const GridSpec& g, int axis, double x,
                                InterpolationOrder order = InterpolationOrder::Septic) {
  const int w = static_cast<int>(order);
  const auto n = static_cast<long>(g.points(axis));
  const double u = (g.wrap(axis, x) - g.lower(axis)) / g.spacing(axis);
  long i0 = static_cast<long>(std::floor(u));
  double s = u - static_cast<double>(i0);
  if (i0 >= n) {  // wrap() may land exactly on the upper edge after rounding
    i0 -= n;
  }
  AxisStencil st;
  st.width = w;
  if (s == 0.0) {
    st.on_node = true;
    st.width = 1;
    st.index[0] = static_cast<std::size_t>(((i0 % n) + n) % n);
    st.weight[0] = 1.0;
    return st;
  }
  const int first = -(w / 2 - 1);
  for (int m = 0; m < w; ++m) {
    const int om = first + m;
    double num = 1.0;
    double den = 1.0;
    for (int q = 0; q < w; ++q) {
      if (q == m) continue;
      const int oq = first + q;
      num *= s - static_cast<double>(oq);
      den *= static_cast<double>(om - oq);
    }
    st.weight[m] = num / den;
    st.index[m] = static_cast<std::size_t>((((i0 + om) % n) + n) % n);
  }
  return st;
}

/// Tensor-product stencil over the grid's axes.
struct GridStencil {
  AxisStencil x;
  AxisStencil y;  ///< unused on 1D grids
  int dim = 1;
  std::size_t ny = 1;

  template <class F>
  void for_each(F&& f) const {
    if (dim == 1) {
      for (int i = 0; i < x.width; ++i) f(x.index[i], x.weight[i]);
      return;
    }
    for (int i = 0; i < x.width; ++i)
      for (int j = 0; j < y.width; ++j) f(x.index[i] * ny + y.index[j], x.weight[i] * y.weight[j]);
  }
};

inline GridStencil grid_stencil(const GridSpec& g, const Point& q,
                                InterpolationOrder order = InterpolationOrder::Septic) {
  GridStencil st;
  st.dim = g.dim();
  st.x = axis_stencil(g, 0, q[0], order);
  if (g.dim() == 2) {
    st.y = axis_stencil(g, 1, q[1], order);
    st.ny = g.points(1);
  }
  return st;
}

/// Periodic interpolation of grid samples at an arbitrary point. Exact at nodes.
template <class T>
T interpolate(const GridSpec& g, std::span<const T> values, const Point& q,
              InterpolationOrder order = InterpolationOrder::Septic) {
  const auto st = grid_stencil(g, q, order);
  T acc{};
  st.for_each([&](std::size_t k, double w) { acc += w * values[k]; });
  return acc;
}

inline cplx interpolate(const ComplexScalarField& f, const Point& q,
                        InterpolationOrder order = InterpolationOrder::Septic) {
  return interpolate<cplx>(f.grid, f.values, q, order);
}

inline double interpolate(const RealField& f, const Point& q,
                          InterpolationOrder order = InterpolationOrder::Septic) {
  return interpolate<double>(f.grid, f.values, q, order);
}

}  // namespace pilotwave
