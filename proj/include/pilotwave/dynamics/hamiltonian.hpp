#pragma once

#include <algorithm>
#include <cmath>
#include <memory>

#include "pilotwave/core/spectral.hpp"
#include "pilotwave/dynamics/system.hpp"

namespace pilotwave::dynamics {

namespace detail {

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs(const std::vector<cplx>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, std::abs(x));
  return m;
}

inline void check_grid(const SystemModel& m, const GridSpec& g) {
  if (!(g == m.grid)) throw ConfigError("state grid does not match the system grid");
}

/// Scalar kinetic + potential operator on the configuration grid:
///   sum_j [ -hbar^2 d_j^2 psi + i hbar q_j (d_j(a_j psi) + a_j d_j psi) + q_j^2 a_j^2 psi ] / 2 m_j
///   + U psi
inline std::vector<cplx> apply_scalar(const GridSpec& g, const SampledPotentials& p, double hbar,
                                      const std::vector<cplx>& psi) {
  const std::size_t n = psi.size();
  std::vector<cplx> out(n);
  const Spectrum spec(g, psi);
  for (int j = 0; j < g.dim(); ++j) {
    const double inv2m = 1.0 / (2.0 * p.mass[j]);
    const auto d2 = spec.derivative(j, 2);
    for (std::size_t k = 0; k < n; ++k) out[k] += -hbar * hbar * inv2m * d2[k];
    if (p.a_zero[j]) continue;
    const auto& a = p.a[j];
    const auto d1 = spec.derivative(j, 1);
    std::vector<cplx> apsi(n);
    for (std::size_t k = 0; k < n; ++k) apsi[k] = a[k] * psi[k];
    const auto dapsi = spectral_derivative(g, apsi, j, 1);
    const cplx cross = cplx(0.0, hbar) * p.q[j] * inv2m;
    const cplx quad = p.q[j] * p.q[j] * inv2m;
    for (std::size_t k = 0; k < n; ++k)
      out[k] += cross * (dapsi[k] + a[k] * d1[k]) + quad * a[k] * a[k] * psi[k];
  }
  for (std::size_t k = 0; k < n; ++k) out[k] += p.potential[k] * psi[k];
  return out;
}

inline double scalar_spectral_radius(const GridSpec& g, const SampledPotentials& p, double hbar) {
  double r = max_abs(p.potential) / hbar;
  for (int j = 0; j < g.dim(); ++j) {
    const double kmax = std::numbers::pi / g.spacing(j);
    const double amax = max_abs(p.a[j]);
    const double qa = std::abs(p.q[j]) * amax;
    r += hbar * kmax * kmax / (2.0 * p.mass[j]) + qa * kmax / p.mass[j] + qa * qa / (2.0 * p.mass[j] * hbar);
  }
  return r;
}

}  // namespace detail

/// H for Schrodinger1D and TwoParticle1D (and the scalar part of Pauli2D),
/// with e -> e_C = e + i e_I inserted in every coupling.
class ScalarHamiltonian {
 public:
  using state_type = ComplexScalarField;

  explicit ScalarHamiltonian(SystemModel model)
      : model_(std::make_shared<const SystemModel>(std::move(model))), cache_(model_) {}

  const SystemModel& model() const { return *model_; }
  std::shared_ptr<const SampledPotentials> potentials(double t) const { return cache_.at(t); }

  ComplexScalarField apply(const ComplexScalarField& psi, double t) const {
    detail::check_grid(*model_, psi.grid);
    return {psi.grid, detail::apply_scalar(psi.grid, *cache_.at(t), model_->constants.hbar, psi.values),
            psi.time};
  }

  /// Upper bound on |eigenvalue of H / hbar|.
  double spectral_radius(double t) const {
    return detail::scalar_spectral_radius(model_->grid, *cache_.at(t), model_->constants.hbar);
  }

 private:
  std::shared_ptr<const SystemModel> model_;
  PotentialCache cache_;
};

/// Pauli Hamiltonian in 2D with B = (0, 0, dAy/dx - dAx/dy):
/// scalar part on each component plus -hbar e_C B sigma_z / 2 m c.
class PauliHamiltonian {
 public:
  using state_type = SpinorField;

  explicit PauliHamiltonian(SystemModel model)
      : model_(std::make_shared<const SystemModel>(std::move(model))), cache_(model_) {
    if (model_->kind != SystemKind::Pauli2D) throw ConfigError("PauliHamiltonian needs a pauli2d model");
  }

  const SystemModel& model() const { return *model_; }
  std::shared_ptr<const SampledPotentials> potentials(double t) const { return cache_.at(t); }

  SpinorField apply(const SpinorField& psi, double t) const {
    detail::check_grid(*model_, psi.grid);
    const auto p = cache_.at(t);
    const double hbar = model_->constants.hbar;
    SpinorField out(psi.grid, psi.time);
    const cplx spin = -hbar * model_->coupling[0].complex() / (2.0 * model_->masses[0] * model_->constants.c);
    for (int a = 0; a < 2; ++a) {
      out.comps[a] = detail::apply_scalar(psi.grid, *p, hbar, psi.comps[a]);
      if (p->magnetic.empty()) continue;
      const double sign = a == 0 ? 1.0 : -1.0;
      for (std::size_t k = 0; k < out.comps[a].size(); ++k)
        out.comps[a][k] += sign * spin * p->magnetic[k] * psi.comps[a][k];
    }
    return out;
  }

  double spectral_radius(double t) const {
    const auto p = cache_.at(t);
    const double hbar = model_->constants.hbar;
    double r = detail::scalar_spectral_radius(model_->grid, *p, hbar);
    if (!p->magnetic.empty())
      r += std::abs(model_->coupling[0].complex()) * detail::max_abs(p->magnetic) /
           (2.0 * model_->masses[0] * model_->constants.c);
    return r;
  }

 private:
  std::shared_ptr<const SystemModel> model_;
  PotentialCache cache_;
};

/// 1+1D Dirac Hamiltonian with alpha = sigma_x, beta = sigma_z:
///   H = c sigma_x (-i hbar d_x - e_C A / c) + beta m c^2 + e_C phi.
class DiracHamiltonian {
 public:
  using state_type = SpinorField;

  explicit DiracHamiltonian(SystemModel model)
      : model_(std::make_shared<const SystemModel>(std::move(model))), cache_(model_) {
    if (model_->kind != SystemKind::Dirac1p1) throw ConfigError("DiracHamiltonian needs a dirac1p1 model");
  }

  const SystemModel& model() const { return *model_; }
  std::shared_ptr<const SampledPotentials> potentials(double t) const { return cache_.at(t); }

  SpinorField apply(const SpinorField& psi, double t) const {
    detail::check_grid(*model_, psi.grid);
    const auto p = cache_.at(t);
    const double hbar = model_->constants.hbar;
    const double c = model_->constants.c;
    const double mc2 = model_->masses[0] * c * c;
    const cplx q = p->q[0];
    SpinorField out(psi.grid, psi.time);
    std::array<std::vector<cplx>, 2> kin;
    for (int a = 0; a < 2; ++a) {
      const auto d = spectral_derivative(psi.grid, psi.comps[a], 0);
      kin[a].resize(d.size());
      for (std::size_t k = 0; k < d.size(); ++k)
        kin[a][k] = c * (cplx(0.0, -hbar) * d[k] - q * p->a[0][k] * psi.comps[a][k]);
    }
    for (std::size_t k = 0; k < psi.grid.size(); ++k) {
      out.comps[0][k] = kin[1][k] + mc2 * psi.comps[0][k] + p->potential[k] * psi.comps[0][k];
      out.comps[1][k] = kin[0][k] - mc2 * psi.comps[1][k] + p->potential[k] * psi.comps[1][k];
    }
    return out;
  }

  double spectral_radius(double t) const {
    const auto p = cache_.at(t);
    const double hbar = model_->constants.hbar;
    const double c = model_->constants.c;
    const double kmax = std::numbers::pi / model_->grid.spacing(0);
    const double mc2 = model_->masses[0] * c * c;
    return c * kmax + (c * std::abs(p->q[0]) * detail::max_abs(p->a[0]) + mc2 + detail::max_abs(p->potential)) / hbar;
  }

 private:
  std::shared_ptr<const SystemModel> model_;
  PotentialCache cache_;
};

template <SystemKind K>
struct SystemTraits;

template <>
struct SystemTraits<SystemKind::Schrodinger1D> {
  using state_type = ComplexScalarField;
  using hamiltonian_type = ScalarHamiltonian;
};
template <>
struct SystemTraits<SystemKind::TwoParticle1D> {
  using state_type = ComplexScalarField;
  using hamiltonian_type = ScalarHamiltonian;
};
template <>
struct SystemTraits<SystemKind::Pauli2D> {
  using state_type = SpinorField;
  using hamiltonian_type = PauliHamiltonian;
};
template <>
struct SystemTraits<SystemKind::Dirac1p1> {
  using state_type = SpinorField;
  using hamiltonian_type = DiracHamiltonian;
};

template <SystemKind K>
using StateOf = typename SystemTraits<K>::state_type;
template <SystemKind K>
using HamiltonianOf = typename SystemTraits<K>::hamiltonian_type;

/// H psi for any supported system.
template <class H>
typename H::state_type apply_hamiltonian(const H& h, const typename H::state_type& psi) {
  return h.apply(psi, psi.time);
}

}  // namespace pilotwave::dynamics
