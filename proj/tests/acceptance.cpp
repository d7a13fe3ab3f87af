// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--strict] [--report <file>] [criterion ...]
//
// Exits 0 once every selected criterion has been evaluated; with --strict the
// exit code is 1 when any of them failed. --report also writes the lines to a file.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pilotwave/pilotwave.hpp"

using namespace pilotwave;
using namespace pilotwave::dynamics;
using namespace pilotwave::guidance;
using namespace pilotwave::weylscale;
using namespace pilotwave::equilibrium;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kL = 16 * kPi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[FAIL " << what << "] ";
    }
  }
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

double linf(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

SystemModel preset_model(std::size_t n, double e, double e_i, const std::string& phi = "sin(x)") {
  return SystemModel::schrodinger1d(GridSpec::line(n, -8 * kPi, 8 * kPi), Coupling(e, e_i),
                                    GaugeConfiguration::parse(1, phi, {"0"}));
}

PilotRun<ComplexScalarField> rk4_run(const SystemModel& m, double dt, long steps, long stride) {
  return simulate(m, gaussian_1d(m.grid, 0.0, 1.0), Rk4Stepper<ScalarHamiltonian>(m), dt, steps, stride);
}

/// The figure preset (e = 0, e_I = 1, phi = sin x) over t in [0, 5].
const PilotRun<ComplexScalarField>& preset_run() {
  static const auto run = rk4_run(preset_model(1024, 0.0, 1.0), 1e-3, 5000, 10);
  return run;
}

std::vector<Point> seed_fan(double from, double to, double step) {
  std::vector<Point> s;
  const long n = std::lround((to - from) / step);
  for (long i = 0; i <= n; ++i) s.push_back({from + step * static_cast<double>(i), 0.0});
  return s;
}

double order(double coarse, double fine) { return std::log2(coarse / fine); }

// Observed rates of a second-order scheme sit at 2 minus higher-order terms.
constexpr double kOrderSlack = 0.05;
bool second_order(double a, double b) { return a >= 2.0 - kOrderSlack && b >= 2.0 - kOrderSlack; }

std::string rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

Outcome hermitian_reduction() {
  Outcome o;
  const auto run = rk4_run(preset_model(1024, 1.0, 0.0), 1e-3, 5000, 10);
  double drift = 0.0;
  for (const auto& s : run.timeline.snapshots) drift = std::max(drift, std::abs(born_norm(s) - 1.0));
  double rho_gap = 0.0, ln_one = 0.0;
  for (double t = 0.0; t <= 5.0 + 1e-9; t += 1.0) {
    const auto s = conserved_density_grid(run, t, DensityMethod::Backward);
    rho_gap = std::max(rho_gap, max_abs_diff(s.rho, s.born));
    for (double l : s.ln_one) ln_one = std::max(ln_one, std::abs(l));
  }
  o.require(drift < 1e-8, "Born drift");
  o.require(rho_gap < 1e-10, "rho = |psi|^2");
  o.detail << "max |N_Born - 1| = " << sci(drift) << " over " << run.timeline.snapshots.size() << " snapshots; max |rho - |psi|^2| = " << sci(rho_gap)
           << " at t = 0..5; max |ln one| = " << sci(ln_one);
  return o;
}

Outcome constant_imaginary_potential() {
  Outcome o;
  const double phi0 = 0.3, t = 1.0;
  const auto lossy = preset_model(1024, 0.0, 1.0, "0.3");
  const auto free = preset_model(1024, 0.0, 0.0, "0");
  const auto a = rk4_run(lossy, 1e-3, 1000, 10);
  const auto b = rk4_run(free, 1e-3, 1000, 10);
  const auto born_a = born_density(a.timeline.at(t));
  const auto born_b = born_density(b.timeline.at(t));
  // |psi|^2 = |psi_free|^2 exp(2 phi0 t), pointwise where the density is resolved
  const double growth = std::exp(2 * phi0 * t);
  const double peak = *std::max_element(born_b.begin(), born_b.end());
  double rel = 0.0;
  for (std::size_t k = 0; k < born_a.size(); ++k)
    if (born_b[k] > 1e-8 * peak) rel = std::max(rel, std::abs(born_a[k] / (born_b[k] * growth) - 1.0));
  const double norm_rel = std::abs(born_norm(a.timeline.at(t)) / growth - 1.0);
  const auto s0 = conserved_density_grid(a, 0.0, DensityMethod::Backward);
  const auto s1 = conserved_density_grid(a, t, DensityMethod::Backward);
  const double vs_free = max_abs_diff(s1.rho, born_b);
  const double vs_initial = max_abs_diff(s1.rho, s0.rho);
  o.require(rel < 1e-6, "pointwise growth");
  o.require(norm_rel < 1e-6, "norm growth");
  o.require(vs_free < 1e-6, "conserved ratio");
  o.detail << "|psi|^2 / (|psi_free|^2 e^{2 phi0 t}) - 1: " << sci(rel) << " pointwise, " << sci(norm_rel)
           << " in norm; |rho(1) - |psi_free(1)|^2|_inf = " << sci(vs_free)
           << " (rho(1) vs rho(0): " << sci(vs_initial) << ", free spreading)";
  return o;
}

Outcome figure_reproduction() {
  Outcome o;
  const auto& run = preset_run();
  const auto s0 = conserved_density_grid(run, 0.0, DensityMethod::Backward);
  o.require(max_abs_diff(s0.rho, s0.born) == 0.0, "t = 0 equality");
  o.detail << "norms (backward, comoving, Born):";
  for (double t = 1.0; t <= 5.0 + 1e-9; t += 1.0) {
    const auto back = conserved_density_grid(run, t, DensityMethod::Backward);
    const auto como = conserved_density_grid(run, t, DensityMethod::Comoving);
    const double nb = total_norm(back), nc = total_norm(como), born = total_norm(back.born, back.grid);
    o.require(std::abs(nb - 1.0) <= 1e-3, "backward norm t=" + sci(t));
    o.require(std::abs(nc - 1.0) <= 1e-3, "comoving norm t=" + sci(t));
    o.require(std::abs(born - 1.0) > 0.1, "Born deviation t=" + sci(t));
    o.detail << " t=" << t << ": " << sci(nb) << ", " << sci(nc) << ", " << sci(born) << ";";

    std::vector<double> one_sq(back.grid.size());
    for (std::size_t k = 0; k < one_sq.size(); ++k) one_sq[k] = std::exp(2.0 * back.ln_one[k]);
    const auto peak = static_cast<std::size_t>(std::max_element(back.born.begin(), back.born.end()) - back.born.begin());
    std::vector<double> support;
    for (std::size_t k = 0; k < one_sq.size(); ++k)
      if (back.born[k] > 1e-6 * back.born[peak]) support.push_back(one_sq[k]);
    std::sort(support.begin(), support.end());
    const double p75 = support[static_cast<std::size_t>(0.75 * static_cast<double>(support.size() - 1))];
    o.require(one_sq[peak] >= p75 && one_sq[peak] >= 0.5 * support.back() && one_sq[peak] > 1.0,
              "large one^2 at the |psi|^2 peak t=" + sci(t));
  }
  return o;
}

Outcome residual_convergence() {
  Outcome o;
  std::vector<double> cont, hj;
  const double t = 1.0;
  for (int level = 0; level < 3; ++level) {
    const std::size_t n = 256u << level;
    const double dt = 4e-3 / (1 << level);
    const auto run = n == 1024 ? preset_run() : rk4_run(preset_model(n, 0.0, 1.0), dt, std::lround(1.2 / dt), 10);
    cont.push_back(continuity_residual(run, t).l2);
    hj.push_back(hamilton_jacobi_residual(run, t, ResidualWeight::Density).l2);
  }
  const double c1 = order(cont[0], cont[1]), c2 = order(cont[1], cont[2]);
  const double h1 = order(hj[0], hj[1]), h2 = order(hj[1], hj[2]);
  o.require(second_order(c1, c2), "continuity order");
  o.require(second_order(h1, h2), "Hamilton-Jacobi order");
  o.detail << "N = 256/512/1024, dt = 4e-3/2e-3/1e-3, t = 1: continuity L2 " << sci(cont[0]) << ", " << sci(cont[1])
           << ", " << sci(cont[2]) << " (orders " << rate(c1) << ", " << rate(c2) << "); HJ L2 " << sci(hj[0]) << ", "
           << sci(hj[1]) << ", " << sci(hj[2]) << " (orders " << rate(h1) << ", " << rate(h2) << ")";
  return o;
}

Outcome gauge_invariance() {
  Outcome o;
  const auto& run = preset_run();
  const auto lambda = gauge::GaugeFunction::spatial_sine(0.1, -8 * kPi, kL);
  const auto twin = gauge::propagate_twin(run, lambda, [](const SystemModel& m) { return Rk4Stepper<ScalarHamiltonian>(m); });
  const double t = 1.0;
  const auto v = gauge::check_velocity_invariance(run, twin, t);
  const auto tr = gauge::check_trajectory_invariance(run, twin, seed_fan(-5.0, 5.0, 0.5), 0.0, t);
  const auto d = gauge::check_density_invariance(run, twin, lambda, t);
  const auto q = gauge::check_quantum_potential_invariance(run.timeline.at(t), run.model, lambda);
  o.require(v.max_deviation < 1e-6, "velocity");
  o.require(tr.max_deviation < 1e-5 && !tr.degraded, "trajectory");
  o.require(d.max_deviation < 1e-4 && !d.degraded, "density");
  o.require(q.max_deviation < 1e-8, "quantum potential");
  o.detail << "lambda = 0.1 sin(2 pi x / L), t = 1: velocity " << sci(v.max_deviation) << ", endpoints "
           << sci(tr.max_deviation) << " (" << tr.compared << " seeds), density " << sci(d.max_deviation)
           << ", quantum potential " << sci(q.max_deviation);
  return o;
}

// Twelfth-order central difference along one axis of a periodic 2D array.
std::vector<double> fd12(const GridSpec& g, const std::vector<double>& f, int axis) {
  constexpr int p = 6;
  double c[p];
  for (int s = 1; s <= p; ++s) {
    double v = 2.0 / s;
    for (int j = 1; j <= s; ++j) v *= static_cast<double>(p - s + j) / static_cast<double>(p + j);
    c[s - 1] = s % 2 == 1 ? v : -v;
  }
  const std::size_t nx = g.points(0), ny = g.points(1);
  const double h = g.spacing(axis);
  std::vector<double> out(f.size());
  for (std::size_t ix = 0; ix < nx; ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy) {
      double acc = 0.0;
      for (int s = 1; s <= p; ++s) {
        const std::size_t a = axis == 0 ? ((ix + s) % nx) * ny + iy : ix * ny + (iy + s) % ny;
        const std::size_t b = axis == 0 ? ((ix + nx - s) % nx) * ny + iy : ix * ny + (iy + ny - s) % ny;
        acc += c[s - 1] * (f[a] - f[b]);
      }
      out[ix * ny + iy] = acc / (2.0 * h);
    }
  return out;
}

Outcome pauli_structure() {
  Outcome o;
  const auto g = GridSpec::square(128, -6.0, 6.0);

  const auto model =
      SystemModel::pauli2d(g, Coupling(0.5, 0.4), GaugeConfiguration::parse(2, "0.1*x*x/(1 + x*x)", {"0.3", "0.2"}));
  const auto f1 = gaussian_packet(g, {GaussianAxis{-1, 1, 0.5}, GaussianAxis{0, 1.2, 0}});
  const auto f2 = gaussian_packet(g, {GaussianAxis{1, 0.8, 0}, GaussianAxis{0.5, 1, -0.3}});
  const double dt = 1e-3;
  const long n = 200;
  const auto sp = propagate(SpinorField(g, f1.values, f2.values), Rk4Stepper<PauliHamiltonian>(model), dt, n, n);
  Rk4Stepper<ScalarHamiltonian> scalar(model);
  const auto s1 = propagate(f1, scalar, dt, n, n).snapshots.back();
  const auto s2 = propagate(f2, scalar, dt, n, n).snapshots.back();
  const double decouple =
      std::max(linf(sp.snapshots.back().comps[0], s1.values), linf(sp.snapshots.back().comps[1], s2.values));

  const auto gc = GridSpec::square(128, -8.0, 8.0);
  const double mass = 1.3;
  const auto mc = SystemModel::pauli2d(gc, Coupling(1.0, 0.0), GaugeConfiguration::free(2), mass);
  SpinorField psi(gc);
  for (std::size_t k = 0; k < gc.size(); ++k) {
    const Point p = gc.node(k);
    const double G = std::exp(-(p[0] * p[0] + p[1] * p[1]) / 4.0);
    const double th = 0.4 * p[0] - 0.3 * p[1] + 0.2 * std::sin(p[1]);
    psi.comps[0][k] = G * std::cos(th);
    psi.comps[1][k] = G * std::sin(th);
  }
  const auto parts = velocity_pauli_parts(psi, mc);
  const auto s = spin_density(psi, 1.0);
  const auto dx = fd12(gc, s.s[2], 0);
  const auto dy = fd12(gc, s.s[2], 1);
  const auto rho = born_density(psi);
  double curl = 0.0;
  for (std::size_t k = 0; k < gc.size(); ++k) {
    if (rho[k] < 1e-4) continue;
    curl = std::max(curl, std::abs(parts.spin_curl[0][k] - dy[k] / (mass * rho[k])));
    curl = std::max(curl, std::abs(parts.spin_curl[1][k] + dx[k] / (mass * rho[k])));
  }

  const auto gw = GridSpec::square(128, 0.0, 2 * kPi);
  const double e_i = 0.8, mw = 1.1;
  const auto mw_model = SystemModel::pauli2d(
      gw, Coupling(0.3, e_i), GaugeConfiguration::parse(2, "0", {"0.5 + 0.2*sin(y)", "-0.3*cos(x)"}), mw);
  const auto uniform = spinor_from_scalar(plane_wave(gw, {1, 2}), cplx(0.8, 0.1), cplx(0.2, -0.5));
  const auto wp = velocity_pauli_parts(uniform, mw_model);
  const auto rw = born_density(uniform);
  const auto sw = spin_density(uniform, 1.0);
  double weyl = 0.0;
  for (std::size_t k = 0; k < gw.size(); ++k) {
    const Point p = gw.node(k);
    const double ax = 0.5 + 0.2 * std::sin(p[1]), ay = -0.3 * std::cos(p[0]);
    const double kf = 2 * e_i / (mw * rw[k]);
    weyl = std::max(weyl, std::abs(wp.weyl[0][k] - kf * ay * sw.s[2][k]));
    weyl = std::max(weyl, std::abs(wp.weyl[1][k] + kf * ax * sw.s[2][k]));
  }

  o.require(decouple < 1e-10, "B = 0 decoupling");
  o.require(curl < 1e-6, "spin-current curl");
  o.require(weyl < 1e-10, "Weyl spin term");
  o.detail << "128^2: B = 0 vs two scalar runs " << sci(decouple) << "; spin curl vs 12th-order FD " << sci(curl)
           << "; Weyl term vs closed form " << sci(weyl);
  return o;
}

Outcome dirac() {
  Outcome o;
  double vmax = 0.0;
  auto track = [&](const VelocityField& v) {
    for (std::size_t k = 0; k < v.v[0].size(); ++k)
      if (!v.masked[k]) vmax = std::max(vmax, std::abs(v.v[0][k]));
  };

  const auto gp = GridSpec::line(64, 0.0, 2 * kPi);
  const PhysicalConstants pc{1.0, 1.0};
  const double mass = 0.7;
  const auto mp = SystemModel::dirac1p1(gp, Coupling(), GaugeConfiguration::free(1), mass, pc);
  double pw = 0.0;
  for (int n : {1, 4, -7, 20}) {
    const auto v = velocity_dirac(dirac_plane_wave(gp, pc, mass, n), mp);
    const double k = n;
    const double expect = pc.hbar * k * pc.c * pc.c / std::hypot(pc.hbar * k * pc.c, mass * pc.c * pc.c);
    for (double x : v.v[0]) pw = std::max(pw, std::abs(x - expect));
    track(v);
  }
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  SpinorField r(gp);
  for (int c = 0; c < 2; ++c)
    for (auto& z : r.comps[c]) z = {nd(rng), nd(rng)};
  track(velocity_dirac(r, mp));

  const auto g = GridSpec::line(512, -8 * kPi, 8 * kPi);
  const auto m = SystemModel::dirac1p1(g, Coupling(0.0, 0.5), GaugeConfiguration::parse(1, "0.5*sin(x)", {"0"}), 1.0, pc);
  const auto psi0 = dirac_positive_energy_packet(g, pc, 1.0, GaussianAxis{0.0, 1.0, 0.5});
  const auto run = simulate(m, psi0, Rk4Stepper<DiracHamiltonian>(m), 1e-3, 2000, 10);
  for (std::size_t i = 0; i < run.timeline.snapshots.size(); ++i) track(run.flow.field(i));
  double drift = 0.0, born = 0.0;
  bool degraded = false;
  for (double t = 0.5; t <= 2.0 + 1e-9; t += 0.5) {
    const auto s = conserved_density_grid(run, t, DensityMethod::Backward);
    drift = std::max(drift, std::abs(total_norm(s) - 1.0));
    born = std::max(born, std::abs(total_norm(s.born, s.grid) - 1.0));
    degraded = degraded || s.degraded;
  }

  o.require(vmax <= pc.c, "|v| <= c");
  o.require(pw < 1e-8, "plane-wave velocity");
  o.require(drift < 1e-3 && !degraded, "conserved norm");
  o.detail << "max |v| = " << sci(vmax) << " (c = 1) over plane waves, a random spinor and 201 evolved fields; "
           << "plane-wave error " << sci(pw) << "; e_I phi = 0.25 sin x: max |N_rho - 1| = " << sci(drift)
           << " on t = 0.5..2 (Born norm moves by up to " << sci(born) << ")";
  return o;
}

Outcome two_particle() {
  Outcome o;
  const double e1 = 0.5, e2 = -0.3;
  auto phi = [](double x, double t) { return 0.5 * std::sin(kPi * x / 10.0) + 0.2 * t; };
  auto a = [](double x, double) { return 0.2 * std::cos(kPi * x / 10.0); };
  auto model = [&](std::size_t n) {
    return SystemModel::two_particle1d(GridSpec::square(n, -10.0, 10.0),
                                       Coupling({ParticleCoupling{0.0, e1}, ParticleCoupling{0.0, e2}}),
                                       GaugeConfiguration::parse(1, "0.5*sin(0.3141592653589793*x) + 0.2*t", {"0.2*cos(0.3141592653589793*x)"}));
  };
  auto state = [](const GridSpec& g) {
    return gaussian_packet(g, {GaussianAxis{-1.0, 1.0, 0.8}, GaussianAxis{1.0, 0.8, -0.5}});
  };

  std::vector<double> res;
  double brute = 0.0, quad = 0.0, ln_end = 0.0;
  bool degraded = false;
  for (int level = 0; level < 3; ++level) {
    const std::size_t n = 64u << level;
    const double dt = 4e-3 / (1 << level);
    const auto m = model(n);
    const auto run = simulate(m, state(m.grid), Rk4Stepper<ScalarHamiltonian>(m), dt, std::lround(0.4 / dt), 10);
    const auto r = continuity_residual(run, 0.2);
    res.push_back(r.l2);
    degraded = degraded || r.degraded;
    if (n != 256) continue;
    for (const Point& q0 : {Point{-1.0, 1.0}, Point{-0.5, 1.5}, Point{0.3, 0.2}}) {
      const auto path = integrate_trajectory(run.flow, q0, 0.0, 0.4);
      // per-particle midpoint line integrals summed independently, and a Simpson cross-check
      double l1 = 0.0, l2 = 0.0, s1 = 0.0, s2 = 0.0;
      for (std::size_t i = 1; i < path.samples.size(); ++i) {
        const auto& p = path.samples[i - 1];
        const auto& q = path.samples[i];
        const double h = q.t - p.t, tm = 0.5 * (p.t + q.t);
        for (int j = 0; j < 2; ++j) {
          const double x0 = p.q_unwrapped[j], x1 = q.q_unwrapped[j], xm = 0.5 * (x0 + x1), dx = x1 - x0;
          const double mid = phi(xm, tm) * h - a(xm, tm) * dx;
          const double simpson = (phi(x0, p.t) + 4 * phi(xm, tm) + phi(x1, q.t)) / 6.0 * h -
                                 (a(x0, p.t) + 4 * a(xm, tm) + a(x1, q.t)) / 6.0 * dx;
          (j == 0 ? l1 : l2) += (j == 0 ? e1 : e2) * mid;
          (j == 0 ? s1 : s2) += (j == 0 ? e1 : e2) * simpson;
        }
      }
      brute = std::max(brute, std::abs(path.back().ln_one - (l1 + l2)));
      quad = std::max(quad, std::abs(path.back().ln_one - (s1 + s2)));
      ln_end = std::max(ln_end, std::abs(path.back().ln_one));
    }
  }
  const double o1 = order(res[0], res[1]), o2 = order(res[1], res[2]);
  o.require(brute < 1e-8, "line-integral sum");
  o.require(second_order(o1, o2), "continuity order");
  o.detail << "256^2, 3 trajectories to t = 0.4: |ln one - sum of particle integrals| = " << sci(brute)
           << " (Simpson " << sci(quad) << ", |ln one| up to " << sci(ln_end) << "); continuity L2 on 64^2/128^2/256^2 "
           << sci(res[0]) << ", " << sci(res[1]) << ", " << sci(res[2]) << " (orders " << rate(o1) << ", " << rate(o2)
           << ")" << (degraded ? "; tail traces flag the snapshots degraded" : "");
  return o;
}

Outcome equilibrium_suite() {
  Outcome o;
  const auto& run = preset_run();
  const GridSpec& g = run.model.grid;
  auto ratio0 = [](const Point& p) { return std::exp(0.5 * p[0] - 0.125); };
  const auto eq0 = conserved_density_grid(run, 0.0, DensityMethod::Backward);
  const double h0 = h_function_fine(g, transport_ratio(eq0, ratio0), eq0.rho).value;
  double drift = 0.0;
  o.detail << "fine H (H0 = " << sci(h0) << "):";
  // asserted while the grid resolves the conserved density (criterion 3 norms); later times are reported
  for (double t = 1.0; t <= 5.0 + 1e-9; t += 1.0) {
    const auto eq = conserved_density_grid(run, t, DensityMethod::Backward);
    const double h = h_function_fine(g, transport_ratio(eq, ratio0), eq.rho).value;
    if (t <= 3.0) {
      drift = std::max(drift, std::abs(h - h0));
      o.require(std::abs(h - h0) < 1e-3, "fine H t=" + sci(t));
    }
    o.detail << " t=" << t << ": " << sci(h) << (t > 3.0 ? " (reported)" : "");
  }
  o.detail << ", max |H - H0| on [0, 3] = " << sci(drift);

  std::ifstream in(std::string(PILOTWAVE_TEST_FIXTURES) + "/relaxation_preset.json");
  const auto fx = nlohmann::json::parse(in);
  const auto ref = fx["h_coarse"].get<std::vector<double>>();
  const auto relax = relaxation_experiment(RelaxationConfig{});
  double fixture = 0.0;
  for (std::size_t i = 0; i < std::min(ref.size(), relax.series.size()); ++i)
    fixture = std::max(fixture, std::abs(relax.series[i].h.value - ref[i]));
  o.require(relax.series.size() == ref.size() && fixture < 2e-3, "relaxation fixture");
  o.require(relax.decrease() >= 0.5, "coarse H decrease");

  RelaxationConfig null_cfg;
  null_cfg.initial = InitialEnsemble::Equilibrium;
  const auto null = relaxation_experiment(null_cfg);
  double worst = 0.0;
  for (const auto& cp : null.series) {
    o.require(cp.h.value <= cp.noise_band, "null experiment t=" + sci(cp.t));
    worst = std::max(worst, cp.h.value / cp.noise_band);
  }
  o.detail << "; relaxation (10^4 samples): coarse H " << sci(relax.series.front().h.value) << " -> "
           << sci(relax.series.back().h.value) << ", decrease " << sci(relax.decrease()) << ", fixture gap "
           << sci(fixture) << "; null: max H / noise band = " << sci(worst);
  return o;
}

Outcome uniqueness() {
  Outcome o;
  const auto m = preset_model(8192, 0.0, 1.0);
  const auto run = simulate(m, gaussian_1d(m.grid, 0.0, 1.0), CrankNicolson1D(m), 1e-3, 2000, 10);
  const double t = 2.0;
  const auto back = conserved_density_grid(run, t, DensityMethod::Backward);
  const auto como = conserved_density_grid(run, t, DensityMethod::Comoving);
  double floor = 0.0;
  for (std::size_t k = 0; k < back.rho.size(); ++k) floor += std::abs(back.rho[k] - como.rho[k]);
  floor *= m.grid.cell_volume();
  const auto zero = uniqueness_experiment(run, 0.0, t);
  const auto r = uniqueness_experiment(run, 0.05, t);
  const double noise = std::max(floor, zero.l1_distance);
  o.require(r.l1_distance > 10 * noise, "L1 above noise floor");
  o.require(r.drift_original() < 1e-3, "original norm");
  o.require(r.drift_modified() < 1e-3, "modified norm");
  o.detail << "N = 8192 CN, t = 2: L1(eps = 0.05) = " << sci(r.l1_distance) << "; eps = 0 floor " << sci(noise)
           << " (identity " << sci(zero.l1_distance) << ", backward vs comoving " << sci(floor) << "); norm drifts "
           << sci(r.drift_original()) << ", " << sci(r.drift_modified()) << "; contamination " << sci(r.contamination);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  configure_threads();
  bool strict = false;
  std::set<int> only;
  std::string report_path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--strict") {
      strict = true;
    } else if (a == "--report" && i + 1 < argc) {
      report_path = argv[++i];
    } else {
      const int id = std::atoi(a.c_str());
      if (id < 1 || id > 10) {
        std::fprintf(stderr, "usage: %s [--strict] [--report <file>] [criterion 1-10 ...]\n", argv[0]);
        return 2;
      }
      only.insert(id);
    }
  }

  const std::vector<Criterion> all = {
      {1, "Hermitian reduction", hermitian_reduction},
      {2, "constant imaginary potential", constant_imaginary_potential},
      {3, "sin x preset properties", figure_reproduction},
      {4, "residual convergence", residual_convergence},
      {5, "gauge invariance", gauge_invariance},
      {6, "Pauli structure", pauli_structure},
      {7, "Dirac 1+1", dirac},
      {8, "two-particle scale factor", two_particle},
      {9, "equilibrium suite", equilibrium_suite},
      {10, "uniqueness", uniqueness},
  };

  std::ofstream report;
  if (!report_path.empty()) report.open(report_path);
  auto emit = [&](const std::string& line) {
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    if (report) report << line << std::flush;
  };
  char buf[64];
  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
      const auto o = c.run();
      pass = o.pass;
      detail = o.detail.str();
    } catch (const std::exception& e) {
      detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ++ran;
    failed += !pass;
    std::snprintf(buf, sizeof buf, "criterion %2d %-4s %-30s %7.1fs  ", c.id, pass ? "PASS" : "FAIL", c.name, secs);
    emit(buf + detail + "\n");
  }
  emit(std::to_string(ran - failed) + "/" + std::to_string(ran) + " criteria passed\n");
  return strict && failed ? 1 : 0;
}
