#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "pilotwave/core/errors.hpp"

namespace pilotwave {

/// A point in (at most two-dimensional) configuration space.
using Point = std::array<double, 2>;

/// Uniform periodic grid with one or two axes. Node j on an axis sits at
/// lower + j * spacing; the upper bound is excluded. Storage is row-major
/// with the last axis fastest.
class GridSpec {
 public:
  GridSpec() = default;

  static GridSpec line(std::size_t n, double lower, double upper) {
    GridSpec g;
    g.dim_ = 1;
    g.points_ = {n, 1};
    g.lower_ = {lower, 0.0};
    g.upper_ = {upper, 1.0};
    g.validate();
    return g;
  }

  static GridSpec plane(std::size_t nx, std::size_t ny, double x_lower, double x_upper, double y_lower,
                        double y_upper) {
    GridSpec g;
    g.dim_ = 2;
    g.points_ = {nx, ny};
    g.lower_ = {x_lower, y_lower};
    g.upper_ = {x_upper, y_upper};
    g.validate();
    return g;
  }

  /// Square grid with identical axes.
  static GridSpec square(std::size_t n, double lower, double upper) {
    return plane(n, n, lower, upper, lower, upper);
  }

  int dim() const { return dim_; }
  std::size_t points(int axis) const { return points_[axis]; }
  std::size_t size() const { return dim_ == 1 ? points_[0] : points_[0] * points_[1]; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  double length(int axis) const { return upper_[axis] - lower_[axis]; }
  double spacing(int axis) const { return length(axis) / static_cast<double>(points_[axis]); }
  double min_spacing() const { return dim_ == 1 ? spacing(0) : std::min(spacing(0), spacing(1)); }
  double cell_volume() const { return dim_ == 1 ? spacing(0) : spacing(0) * spacing(1); }

  double coord(int axis, std::size_t i) const {
    return lower_[axis] + static_cast<double>(i) * spacing(axis);
  }

  std::size_t index(std::size_t ix, std::size_t iy = 0) const {
    return dim_ == 1 ? ix : ix * points_[1] + iy;
  }

  /// Coordinates of flat node index k.
  Point node(std::size_t k) const {
    if (dim_ == 1) return {coord(0, k), 0.0};
    return {coord(0, k / points_[1]), coord(1, k % points_[1])};
  }

  double wrap(int axis, double x) const {
    const double len = length(axis);
    double r = std::fmod(x - lower_[axis], len);
    if (r < 0.0) r += len;
    if (r >= len) r -= len;  // fmod of -tiny can round up to len
    return lower_[axis] + r;
  }

  Point wrap(Point q) const {
    q[0] = wrap(0, q[0]);
    if (dim_ == 2) q[1] = wrap(1, q[1]);
    return q;
  }

  bool operator==(const GridSpec& o) const {
    return dim_ == o.dim_ && points_ == o.points_ && lower_ == o.lower_ && upper_ == o.upper_;
  }

  std::string describe() const {
    std::string s = std::to_string(points_[0]);
    if (dim_ == 2) s += "x" + std::to_string(points_[1]);
    return s + " periodic grid";
  }

 private:
  void validate() const {
    for (int a = 0; a < dim_; ++a) {
      const std::size_t n = points_[a];
      if (n < 16) throw ConfigError("grid needs at least 16 points per axis");
      if ((n & (n - 1)) != 0) throw ConfigError("grid points per axis must be a power of two");
      if (!std::isfinite(lower_[a]) || !std::isfinite(upper_[a]) || !(upper_[a] > lower_[a]))
        throw ConfigError("grid extent must satisfy lower < upper");
    }
  }

  int dim_ = 1;
  std::array<std::size_t, 2> points_{16, 1};
  std::array<double, 2> lower_{0.0, 0.0};
  std::array<double, 2> upper_{1.0, 1.0};
};

}  // namespace pilotwave
