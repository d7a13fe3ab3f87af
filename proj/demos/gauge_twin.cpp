// Re-propagates the sin(x) preset in a transformed gauge and compares the two runs.
#include <cstdio>
#include <numbers>

#include "pilotwave/pilotwave.hpp"

using namespace pilotwave;

int main() {
  configure_threads();
  constexpr double pi = std::numbers::pi;
  const auto model = SystemModel::schrodinger1d(GridSpec::line(512, -8 * pi, 8 * pi), Coupling(0.0, 1.0),
                                                GaugeConfiguration::parse(1, "sin(x)", {"0"}));
  auto rk4 = [](const SystemModel& m) { return dynamics::Rk4Stepper<dynamics::ScalarHamiltonian>(m); };
  const auto run = guidance::simulate(model, dynamics::gaussian_1d(model.grid, 0.0, 1.0), rk4(model), 2e-3, 500, 5);
  const auto lambda = gauge::GaugeFunction::spatial_sine(0.1, -8 * pi, 16 * pi);
  const auto twin = gauge::propagate_twin(run, lambda, rk4);
  const double t = 1.0;
  std::printf("velocity   %.3g\n", gauge::check_velocity_invariance(run, twin, t).max_deviation);
  std::printf("endpoints  %.3g\n",
              gauge::check_trajectory_invariance(run, twin, {{-1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}}, 0.0, t).max_deviation);
  std::printf("density    %.3g\n", gauge::check_density_invariance(run, twin, lambda, t).max_deviation);
}
