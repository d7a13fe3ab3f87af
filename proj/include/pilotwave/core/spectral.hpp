#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "pilotwave/core/fields.hpp"

namespace pilotwave {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// Owns aligned buffers and forward/backward plans for one grid shape.
class FftWorkspace {
 public:
  FftWorkspace(std::size_t nx, std::size_t ny) : n_(nx * ny) {
    buf_ = fftw_alloc_complex(n_);
    std::lock_guard lock(fftw_planner_mutex());
    if (ny == 1) {
      fwd_ = fftw_plan_dft_1d(static_cast<int>(nx), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_1d(static_cast<int>(nx), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    } else {
      fwd_ = fftw_plan_dft_2d(static_cast<int>(nx), static_cast<int>(ny), buf_, buf_, FFTW_FORWARD,
                              FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_2d(static_cast<int>(nx), static_cast<int>(ny), buf_, buf_, FFTW_BACKWARD,
                              FFTW_ESTIMATE);
    }
  }
  FftWorkspace(const FftWorkspace&) = delete;
  FftWorkspace& operator=(const FftWorkspace&) = delete;
  ~FftWorkspace() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }

  /// Unnormalized forward transform.
  void forward(std::span<const cplx> in, std::span<cplx> out) { run(fwd_, in, out); }
  /// Unnormalized backward transform.
  void backward(std::span<const cplx> in, std::span<cplx> out) { run(bwd_, in, out); }

 private:
  void run(fftw_plan p, std::span<const cplx> in, std::span<cplx> out) {
    auto* b = reinterpret_cast<cplx*>(buf_);
    std::copy(in.begin(), in.end(), b);
    fftw_execute(p);
    std::copy(b, b + n_, out.begin());
  }

  std::size_t n_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

/// Long double counterpart, used where second derivatives are divided by small amplitudes.
class FftWorkspaceLd {
 public:
  FftWorkspaceLd(std::size_t nx, std::size_t ny) : n_(nx * ny) {
    buf_ = fftwl_alloc_complex(n_);
    std::lock_guard lock(fftw_planner_mutex());
    if (ny == 1) {
      fwd_ = fftwl_plan_dft_1d(static_cast<int>(nx), buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
      bwd_ = fftwl_plan_dft_1d(static_cast<int>(nx), buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    } else {
      fwd_ = fftwl_plan_dft_2d(static_cast<int>(nx), static_cast<int>(ny), buf_, buf_, FFTW_FORWARD,
                               FFTW_ESTIMATE);
      bwd_ = fftwl_plan_dft_2d(static_cast<int>(nx), static_cast<int>(ny), buf_, buf_, FFTW_BACKWARD,
                               FFTW_ESTIMATE);
    }
  }
  FftWorkspaceLd(const FftWorkspaceLd&) = delete;
  FftWorkspaceLd& operator=(const FftWorkspaceLd&) = delete;
  ~FftWorkspaceLd() {
    std::lock_guard lock(fftw_planner_mutex());
    fftwl_destroy_plan(fwd_);
    fftwl_destroy_plan(bwd_);
    fftwl_free(buf_);
  }

  using value = std::complex<long double>;
  void forward(std::span<const value> in, std::span<value> out) { run(fwd_, in, out); }
  void backward(std::span<const value> in, std::span<value> out) { run(bwd_, in, out); }

 private:
  void run(fftwl_plan p, std::span<const value> in, std::span<value> out) {
    auto* b = reinterpret_cast<value*>(buf_);
    std::copy(in.begin(), in.end(), b);
    fftwl_execute(p);
    std::copy(b, b + n_, out.begin());
  }

  std::size_t n_;
  fftwl_complex* buf_ = nullptr;
  fftwl_plan fwd_ = nullptr;
  fftwl_plan bwd_ = nullptr;
};

inline FftWorkspaceLd& workspace_ld_for(const GridSpec& g) {
  thread_local std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<FftWorkspaceLd>> cache;
  const auto key = std::make_pair(g.points(0), g.dim() == 2 ? g.points(1) : std::size_t{1});
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, std::make_unique<FftWorkspaceLd>(key.first, key.second)).first;
  return *it->second;
}

inline FftWorkspace& workspace_for(const GridSpec& g) {
  thread_local std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<FftWorkspace>> cache;
  const auto key = std::make_pair(g.points(0), g.dim() == 2 ? g.points(1) : std::size_t{1});
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, std::make_unique<FftWorkspace>(key.first, key.second)).first;
  return *it->second;
}

}  // namespace detail

/// Angular wavenumber of FFT bin j on an axis with n points and length L.
/// The Nyquist bin returns +pi n / L.
inline double wavenumber(std::size_t j, std::size_t n, double length) {
  const double base = 2.0 * std::numbers::pi / length;
  const auto sj = static_cast<long>(j);
  const auto sn = static_cast<long>(n);
  return base * static_cast<double>(sj <= sn / 2 ? sj : sj - sn);
}

/// Fourier coefficients of grid samples on a periodic grid. Derivatives are
/// taken by multiplying with (i k)^order; odd orders drop the Nyquist bin.
class Spectrum {
 public:
  Spectrum(const GridSpec& g, std::span<const cplx> values) : grid_(g), coeffs_(g.size()) {
    if (values.size() != g.size()) throw ConfigError("spectral input size does not match grid");
    detail::workspace_for(g).forward(values, coeffs_);
  }

  std::vector<cplx> derivative(int axis, int order = 1) const {
    if (axis >= grid_.dim()) throw ConfigError("derivative axis out of range");
    std::vector<cplx> tmp(coeffs_.size());
    const std::size_t nx = grid_.points(0);
    const std::size_t ny = grid_.dim() == 2 ? grid_.points(1) : 1;
    const std::size_t n_axis = grid_.points(axis);
    const double len = grid_.length(axis);
    for (std::size_t ix = 0; ix < nx; ++ix) {
      for (std::size_t iy = 0; iy < ny; ++iy) {
        const std::size_t j = axis == 0 ? ix : iy;
        const std::size_t k = ix * ny + iy;
        cplx factor = multiplier(j, n_axis, len, order);
        tmp[k] = coeffs_[k] * factor;
      }
    }
    return inverse(std::move(tmp));
  }

  /// Sum of second derivatives over all axes.
  std::vector<cplx> laplacian() const {
    std::vector<cplx> tmp(coeffs_.size());
    const std::size_t nx = grid_.points(0);
    const std::size_t ny = grid_.dim() == 2 ? grid_.points(1) : 1;
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double kx = wavenumber(ix, nx, grid_.length(0));
      for (std::size_t iy = 0; iy < ny; ++iy) {
        const double ky = grid_.dim() == 2 ? wavenumber(iy, ny, grid_.length(1)) : 0.0;
        const std::size_t k = ix * ny + iy;
        tmp[k] = -coeffs_[k] * (kx * kx + ky * ky);
      }
    }
    return inverse(std::move(tmp));
  }

  const std::vector<cplx>& coefficients() const { return coeffs_; }

 private:
  static cplx multiplier(std::size_t j, std::size_t n, double len, int order) {
    if (order == 0) return 1.0;
    if (order % 2 == 1 && j == n / 2) return 0.0;
    const double k = wavenumber(j, n, len);
    cplx f = 1.0;
    for (int o = 0; o < order; ++o) f *= cplx(0.0, k);
    return f;
  }

  std::vector<cplx> inverse(std::vector<cplx> tmp) const {
    std::vector<cplx> out(tmp.size());
    detail::workspace_for(grid_).backward(tmp, out);
    const double inv_n = 1.0 / static_cast<double>(tmp.size());
    for (auto& z : out) z *= inv_n;
    return out;
  }

  GridSpec grid_;
  std::vector<cplx> coeffs_;
};

/// First and second derivatives along one axis in long double arithmetic.
struct ExtendedDerivatives {
  std::vector<std::complex<long double>> first, second;
};

inline ExtendedDerivatives extended_derivatives(const GridSpec& g, std::span<const cplx> f, int axis) {
  using value = std::complex<long double>;
  if (f.size() != g.size()) throw ConfigError("spectral input size does not match grid");
  if (axis >= g.dim()) throw ConfigError("derivative axis out of range");
  auto& ws = detail::workspace_ld_for(g);
  std::vector<value> in(f.begin(), f.end()), coeffs(f.size());
  ws.forward(in, coeffs);
  const std::size_t nx = g.points(0);
  const std::size_t ny = g.dim() == 2 ? g.points(1) : 1;
  const std::size_t n_axis = g.points(axis);
  const long double base = 2.0L * std::numbers::pi_v<long double> / static_cast<long double>(g.length(axis));
  std::vector<value> c1(f.size()), c2(f.size());
  for (std::size_t ix = 0; ix < nx; ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy) {
      const std::size_t j = axis == 0 ? ix : iy;
      const std::size_t k = ix * ny + iy;
      const auto sj = static_cast<long>(j), sn = static_cast<long>(n_axis);
      const long double kk = base * static_cast<long double>(sj <= sn / 2 ? sj : sj - sn);
      c1[k] = j == n_axis / 2 ? value(0) : coeffs[k] * value(0, kk);
      c2[k] = -coeffs[k] * kk * kk;
    }
  ExtendedDerivatives out{std::vector<value>(f.size()), std::vector<value>(f.size())};
  ws.backward(c1, out.first);
  ws.backward(c2, out.second);
  const long double inv_n = 1.0L / static_cast<long double>(f.size());
  for (auto& z : out.first) z *= inv_n;
  for (auto& z : out.second) z *= inv_n;
  return out;
}

/// d psi / d x_axis, exact for band-limited fields.
inline ComplexScalarField spectral_gradient(const ComplexScalarField& field, int axis) {
  return ComplexScalarField(field.grid, Spectrum(field.grid, field.values).derivative(axis), field.time);
}

inline std::vector<cplx> spectral_derivative(const GridSpec& g, std::span<const cplx> f, int axis,
                                             int order = 1) {
  return Spectrum(g, f).derivative(axis, order);
}

/// Derivative of real samples; the imaginary part of the round trip is dropped.
inline std::vector<double> spectral_derivative_real(const GridSpec& g, std::span<const double> f,
                                                    int axis, int order = 1) {
  std::vector<cplx> z(f.begin(), f.end());
  auto d = Spectrum(g, z).derivative(axis, order);
  std::vector<double> out(d.size());
  for (std::size_t k = 0; k < d.size(); ++k) out[k] = d[k].real();
  return out;
}

}  // namespace pilotwave
