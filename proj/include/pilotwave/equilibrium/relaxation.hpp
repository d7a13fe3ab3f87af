#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "pilotwave/dynamics/hamiltonian.hpp"
#include "pilotwave/dynamics/initial_states.hpp"
#include "pilotwave/dynamics/steppers.hpp"
#include "pilotwave/equilibrium/h_function.hpp"
#include "pilotwave/guidance/run.hpp"

namespace pilotwave::equilibrium {

enum class RelaxationState { RandomModes, PlaneWave };
enum class InitialEnsemble { Uniform, Equilibrium, Custom };

/// Two free particles on a periodic line (a 2D configuration torus), e = e_I = 0.
struct RelaxationConfig {
  std::size_t grid_points = 64;
  double box = 2.0 * std::numbers::pi;
  RelaxationState state = RelaxationState::RandomModes;
  int max_mode = 2;  ///< momenta |n_j| <= max_mode on each axis
  std::uint64_t state_seed = 20240917;
  std::array<int, 2> plane_wave_mode{1, 1};
  InitialEnsemble initial = InitialEnsemble::Uniform;
  DensityFunction custom_density;  ///< used with InitialEnsemble::Custom (normalization not required)
  std::size_t samples = 10000;
  std::uint64_t sample_seed = 1;
  std::size_t cells = 8;
  double dt = 2.5e-3;
  long stride = 20;
  double t_final = 4.0 * std::numbers::pi;
  std::size_t checkpoints = 9;  ///< evenly spaced, both ends included
  std::size_t bootstrap_resamples = 400;
  std::uint64_t bootstrap_seed = 7;
  double confidence = 0.95;
  double noise_confidence = 0.99;
};

struct RelaxationCheckpoint {
  double t = 0.0;
  HValue h;
  ConfidenceInterval ci;
  double noise_band = 0.0;
  double unreliable_fraction = 0.0;
  bool degraded = false;
  std::vector<std::size_t> histogram;
  std::vector<double> equilibrium_cells;
};

struct RelaxationResult {
  RelaxationConfig config;
  std::vector<RelaxationCheckpoint> series;
  std::vector<std::string> warnings;

  /// Fractional drop 1 - H(t_final) / H(0).
  double decrease() const {
    const double h0 = series.front().h.value;
    return h0 > 0.0 ? 1.0 - series.back().h.value / h0 : 0.0;
  }
  bool any_degraded() const {
    for (const auto& c : series)
      if (c.degraded) return true;
    return false;
  }
};

inline SystemModel relaxation_model(const RelaxationConfig& cfg) {
  const GridSpec g = GridSpec::square(cfg.grid_points, 0.0, cfg.box);
  return SystemModel::two_particle1d(g, Coupling({ParticleCoupling{0.0, 0.0}, ParticleCoupling{0.0, 0.0}}),
                                    GaugeConfiguration::parse(1, "0", {"0"}));
}

inline ComplexScalarField relaxation_state(const RelaxationConfig& cfg, const GridSpec& g) {
  if (cfg.state == RelaxationState::PlaneWave) return dynamics::plane_wave(g, cfg.plane_wave_mode);
  if (cfg.max_mode < 1) throw ConfigError("relaxation superposition needs max_mode >= 1");
  return dynamics::mode_superposition(g, dynamics::random_phase_modes(2, cfg.max_mode, cfg.state_seed));
}

inline guidance::PilotRun<ComplexScalarField> relaxation_run(const RelaxationConfig& cfg) {
  if (!(cfg.dt > 0.0) || !(cfg.t_final > 0.0)) throw ConfigError("relaxation needs dt > 0 and t_final > 0");
  if (cfg.stride < 1) throw ConfigError("snapshot stride must be at least 1");
  const auto model = relaxation_model(cfg);
  const auto psi0 = relaxation_state(cfg, model.grid);
  long n = static_cast<long>(std::llround(cfg.t_final / cfg.dt));
  n = (n + cfg.stride - 1) / cfg.stride * cfg.stride;
  dynamics::Rk4Stepper<dynamics::ScalarHamiltonian> stepper(model);
  return guidance::simulate(model, psi0, stepper, cfg.dt, n, cfg.stride);
}

/// Evolves an ensemble through a two-particle superposition and records the
/// coarse-grained H against |psi|^2 at evenly spaced checkpoints.
inline RelaxationResult relaxation_experiment(const RelaxationConfig& cfg) {
  if (cfg.checkpoints < 2) throw ConfigError("relaxation needs at least two checkpoints");
  RelaxationResult res;
  res.config = cfg;
  const auto run = relaxation_run(cfg);
  const GridSpec& g = run.model.grid;
  const CoarseGraining cg(g, cfg.cells, cfg.cells);

  const auto rho_eq0 = born_density(run.timeline.snapshots.front());
  Ensemble ens;
  switch (cfg.initial) {
    case InitialEnsemble::Uniform:
      ens = sample_ensemble(g, std::vector<double>(g.size(), 1.0 / (g.length(0) * g.length(1))), cfg.samples,
                            cfg.sample_seed, run.timeline.t0, "uniform");
      break;
    case InitialEnsemble::Equilibrium:
      ens = sample_ensemble(g, rho_eq0, cfg.samples, cfg.sample_seed, run.timeline.t0, "equilibrium");
      break;
    case InitialEnsemble::Custom: {
      if (!cfg.custom_density) throw ConfigError("custom initial ensemble needs a density");
      std::vector<double> v(g.size());
      double total = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) total += v[k] = cfg.custom_density(g.node(k));
      if (!(total > 0.0)) throw ConfigError("custom initial density has no mass");
      for (double& x : v) x /= total * g.cell_volume();
      ens = sample_ensemble(g, v, cfg.samples, cfg.sample_seed, run.timeline.t0, "custom");
      break;
    }
  }
  if (ens.error) throw ConfigError("relaxation needs a non-empty ensemble");
  res.warnings = ens.warnings;

  const std::size_t last = run.timeline.snapshots.size() - 1;
  for (std::size_t c = 0; c < cfg.checkpoints; ++c) {
    const std::size_t idx = static_cast<std::size_t>(
        std::llround(static_cast<double>(last) * static_cast<double>(c) / static_cast<double>(cfg.checkpoints - 1)));
    const double t = run.timeline.snapshot_time(idx);
    if (t > ens.t) {
      const auto before = ens.flagged;
      ens = evolve_ensemble(ens, run.flow, t);
      for (std::size_t i = 0; i < before.size(); ++i) ens.flagged[i] |= before[i];
      ens.degraded = ens.unreliable_fraction() > kDegradedEnsembleFraction;
    }
    RelaxationCheckpoint cp;
    cp.t = t;
    const auto rho_eq = born_density(run.timeline.snapshots[idx]);
    cp.equilibrium_cells = cg.cell_probabilities(rho_eq);
    cp.histogram = cg.histogram(ens);
    cp.h = relative_entropy(frequencies(cp.histogram), cp.equilibrium_cells);
    cp.ci = bootstrap_h_coarse(ens, rho_eq, cg, cfg.bootstrap_resamples, cfg.bootstrap_seed + c, cfg.confidence);
    cp.noise_band = null_noise_band(cp.equilibrium_cells, ens.size(), cfg.bootstrap_resamples,
                                    cfg.bootstrap_seed ^ (0x5bd1e995ULL + c), cfg.noise_confidence);
    cp.unreliable_fraction = ens.unreliable_fraction();
    cp.degraded = ens.degraded;
    res.series.push_back(std::move(cp));
  }
  return res;
}

}  // namespace pilotwave::equilibrium
