// Born norm against the norm of |psi|^2 / one^2 on the sin(x) preset.
#include <cstdio>
#include <numbers>

#include "pilotwave/pilotwave.hpp"

using namespace pilotwave;

int main() {
  configure_threads();
  constexpr double pi = std::numbers::pi;
  const auto model = SystemModel::schrodinger1d(GridSpec::line(1024, -8 * pi, 8 * pi), Coupling(0.0, 1.0),
                                                GaugeConfiguration::parse(1, "sin(x)", {"0"}));
  const auto psi0 = dynamics::gaussian_1d(model.grid, 0.0, 1.0);
  const auto run = guidance::simulate(model, psi0, dynamics::Rk4Stepper<dynamics::ScalarHamiltonian>(model), 1e-3, 3000, 10);
  std::printf("%6s %14s %14s\n", "t", "born", "conserved");
  for (double t = 0.0; t <= 3.0 + 1e-9; t += 0.5) {
    const auto s = weylscale::conserved_density_grid(run, t, weylscale::DensityMethod::Backward);
    std::printf("%6.2f %14.8f %14.8f\n", t, weylscale::total_norm(s.born, s.grid), weylscale::total_norm(s));
  }
}
