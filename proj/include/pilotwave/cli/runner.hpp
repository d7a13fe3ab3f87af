#pragma once

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pilotwave/cli/datasets.hpp"
#include "pilotwave/cli/run_spec.hpp"
#include "pilotwave/dynamics/hamiltonian.hpp"
#include "pilotwave/dynamics/initial_states.hpp"
#include "pilotwave/dynamics/steppers.hpp"
#include "pilotwave/equilibrium/relaxation.hpp"
#include "pilotwave/equilibrium/uniqueness.hpp"
#include "pilotwave/gauge/invariance.hpp"
#include "pilotwave/guidance/run.hpp"
#include "pilotwave/weylscale/density.hpp"
#include "pilotwave/weylscale/log_scale.hpp"

namespace pilotwave::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitDegraded = 4;

/// Exit code for an exception escaping a run.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return kExitDivergence;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const expr::EvalError*>(&e) ||
      dynamic_cast<const UnsupportedError*>(&e) || dynamic_cast<const StepperError*>(&e) ||
      dynamic_cast<const DegenerateFieldError*>(&e))
    return kExitConfig;
  return 1;
}

struct RunOutcome {
  int exit_code = kExitOk;
  std::filesystem::path output_dir;
  std::vector<std::string> degraded;  ///< one reason per degraded experiment
  std::vector<std::string> files;     ///< written outputs, relative to output_dir
  Json summary;
};

inline Json source_json(const SourceDef& d) {
  if (!d.table.empty()) return Json{{"table", d.table}};
  return d.expr;
}

inline Json points_json(const std::vector<Point>& pts, int dim) {
  Json a = Json::array();
  for (const auto& p : pts) a.push_back(dim == 1 ? Json::array({p[0]}) : Json::array({p[0], p[1]}));
  return a;
}

inline Json complex_json(cplx z) { return Json::array({z.real(), z.imag()}); }

inline Json experiment_json(const Experiment& e, int dim) {
  return std::visit(
      [&](const auto& x) -> Json {
        using E = std::decay_t<decltype(x)>;
        Json j{{"type", experiment_name(e)}};
        if constexpr (std::is_same_v<E, DensityExperiment>) {
          j["times"] = x.times;
          j["methods"] = x.methods;
        } else if constexpr (std::is_same_v<E, TrajectoryExperiment>) {
          j["seeds"] = points_json(x.seeds, dim);
          if (x.t_end) j["t_end"] = *x.t_end;
        } else if constexpr (std::is_same_v<E, GaugeCheckExperiment>) {
          j["lambda"] = x.lambda;
          j["time"] = x.time;
          j["seeds"] = points_json(x.seeds, dim);
        } else if constexpr (std::is_same_v<E, RelaxExperiment>) {
          const auto& c = x.config;
          j["grid_points"] = c.grid_points;
          j["max_mode"] = c.max_mode;
          j["state"] = c.state == equilibrium::RelaxationState::PlaneWave ? "plane_wave" : "random_modes";
          j["plane_wave_mode"] = c.plane_wave_mode;
          j["initial"] = c.initial == equilibrium::InitialEnsemble::Equilibrium ? "equilibrium" : "uniform";
          j["state_seed"] = c.state_seed;
          j["samples"] = c.samples;
          j["sample_seed"] = c.sample_seed;
          j["cells"] = c.cells;
          j["dt"] = c.dt;
          j["stride"] = c.stride;
          j["t_final"] = c.t_final;
          j["checkpoints"] = c.checkpoints;
          j["bootstrap_resamples"] = c.bootstrap_resamples;
        } else if constexpr (std::is_same_v<E, UniquenessExperiment>) {
          j["epsilon"] = x.epsilon;
          j["time"] = x.time;
          j["cap"] = x.cap;
          j["seeds"] = points_json(x.seeds, dim);
        } else {
          j["preset"] = x.preset;
          j["times"] = x.times;
          j["seed_from"] = x.seed_from;
          j["seed_to"] = x.seed_to;
          j["seed_step"] = x.seed_step;
        }
        return j;
      },
      e);
}

/// The spec with every default filled in, in the input schema.
inline Json spec_to_json(const RunSpec& s) {
  const int dim = static_cast<int>(s.points.size());
  Json j;
  j["system"] = to_string(s.system);
  j["grid"] = {{"points", s.points}, {"lower", s.lower}, {"upper", s.upper}};
  j["constants"] = {{"hbar", s.constants.hbar}, {"c", s.constants.c}};
  j["masses"] = s.masses;
  Json cp = Json::array();
  for (const auto& c : s.coupling) cp.push_back({{"e", c.e}, {"e_I", c.e_I}});
  j["coupling"] = cp;
  Json a = Json::array();
  for (const auto& d : s.a) a.push_back(source_json(d));
  j["gauge"] = {{"phi", source_json(s.phi)}, {"A", a}};
  if (!s.interaction.empty()) j["interaction"] = s.interaction;
  const auto& in = s.initial;
  Json ij{{"family", in.family}};
  if (in.family == "gaussian" || in.family == "dirac_packet") {
    ij["center"] = in.center;
    ij["width"] = in.width;
    ij["momentum"] = in.momentum;
    if (s.system == SystemKind::Pauli2D || s.system == SystemKind::Dirac1p1)
      ij["spin"] = Json::array({complex_json(in.spin[0]), complex_json(in.spin[1])});
  } else if (in.family == "plane_wave" || in.family == "dirac_plane_wave") {
    ij["mode"] = in.mode;
    if (in.family == "dirac_plane_wave") ij["positive"] = in.positive;
  } else if (in.family == "modes") {
    Json ms = Json::array();
    for (const auto& m : in.modes) ms.push_back({{"n", m.n}, {"amplitude", complex_json(m.amplitude)}});
    ij["modes"] = ms;
  } else if (in.family == "random_modes") {
    ij["max_mode"] = in.max_mode;
    ij["seed"] = in.seed.value_or(s.seed);
  } else if (in.family == "file") {
    ij["file"] = in.file;
  }
  j["initial_state"] = ij;
  j["stepper"] = s.stepper;
  j["dt"] = s.dt;
  j["t_final"] = s.t_final;
  j["snapshot_stride"] = s.snapshot_stride;
  j["integrator"] = {{"max_cells_per_step", s.integrator.max_cells_per_step},
                     {"max_refinements", s.integrator.max_refinements}};
  Json ex = Json::array();
  for (const auto& e : s.experiments) ex.push_back(experiment_json(e, dim));
  j["experiments"] = ex;
  j["seed"] = s.seed;
  j["output_dir"] = s.output_dir;
  return j;
}

inline Json conventions_json() {
  const weylscale::ScaleConvention c;
  return {{"units", "hbar and c as given in constants (default 1)"},
          {"metric_signature", c.metric},
          {"line_integral", c.line_integral},
          {"line_integral_sign", "ln one += (e_I / hbar c) (phi c dt - A.dx)"},
          {"scale_factor", c.scale_factor},
          {"reference_gauge", c.reference_gauge},
          {"ln_one_t0", c.ln_one_t0},
          {"increment_rule", c.increment_rule},
          {"coupling", "e_C = e + i e_I"},
          {"node_threshold", kNodeThreshold},
          {"trajectory_unreliable_fraction", guidance::kUnreliableFraction},
          {"density_degraded_fraction", weylscale::kDegradedFraction}};
}

namespace detail {

inline std::vector<std::vector<double>> read_table_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      if (b == std::string::npos) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty cell");
      double v = 0.0;
      const auto res = std::from_chars(cell.data() + b, cell.data() + e + 1, v);
      if (res.ec != std::errc() || res.ptr != cell.data() + e + 1 || !std::isfinite(v))
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": not a finite number");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::filesystem::path resolve(const RunSpec& s, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : s.base_dir / path;
}

/// Grid on which gauge tables are sampled: physical space of the system.
inline GridSpec physical_grid(const RunSpec& s) {
  if (s.system == SystemKind::Pauli2D) return GridSpec::plane(s.points[0], s.points[1], s.lower[0], s.upper[0], s.lower[1], s.upper[1]);
  return GridSpec::line(s.points[0], s.lower[0], s.upper[0]);
}

inline ScalarSource make_source(const RunSpec& s, const SourceDef& d) {
  if (d.table.empty()) return ScalarSource::parse(d.expr);
  const GridSpec g = physical_grid(s);
  const auto rows = read_table_rows(resolve(s, d.table));
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.size() != 1) throw ConfigError("table " + d.table + " must hold one value per line");
    v.push_back(r[0]);
  }
  if (v.size() != g.size())
    throw ConfigError("table " + d.table + " has " + std::to_string(v.size()) + " values, the grid has " +
                      std::to_string(g.size()));
  return ScalarSource(TabulatedFunction{g, std::move(v)});
}

}  // namespace detail

inline GridSpec build_grid(const RunSpec& s) {
  if (s.points.size() == 1) return GridSpec::line(s.points[0], s.lower[0], s.upper[0]);
  return GridSpec::plane(s.points[0], s.points[1], s.lower[0], s.upper[0], s.lower[1], s.upper[1]);
}

inline SystemModel build_model(const RunSpec& s) {
  const GridSpec g = build_grid(s);
  const int gauge_dim = s.system == SystemKind::Pauli2D ? 2 : 1;
  std::vector<ScalarSource> a;
  for (const auto& d : s.a) a.push_back(detail::make_source(s, d));
  GaugeConfiguration gauge(gauge_dim, detail::make_source(s, s.phi), std::move(a));
  const Coupling coupling(s.coupling);
  switch (s.system) {
    case SystemKind::Schrodinger1D: return SystemModel::schrodinger1d(g, coupling, gauge, s.masses[0], s.constants);
    case SystemKind::TwoParticle1D: {
      std::optional<expr::Expression> v;
      if (!s.interaction.empty()) v = expr::Expression::parse(s.interaction);
      return SystemModel::two_particle1d(g, coupling, gauge, {s.masses[0], s.masses[1]}, s.constants, v);
    }
    case SystemKind::Pauli2D: return SystemModel::pauli2d(g, coupling, gauge, s.masses[0], s.constants);
    case SystemKind::Dirac1p1: return SystemModel::dirac1p1(g, coupling, gauge, s.masses[0], s.constants);
  }
  throw ConfigError("unknown system");
}

inline ComplexScalarField scalar_profile(const RunSpec& s, const GridSpec& g) {
  const auto& in = s.initial;
  if (in.family == "gaussian" || in.family == "dirac_packet") {
    std::vector<dynamics::GaussianAxis> axes;
    for (std::size_t a = 0; a < static_cast<std::size_t>(g.dim()); ++a)
      axes.push_back({in.center.at(a), in.width.at(a), in.momentum.at(a)});
    return dynamics::gaussian_packet(g, axes);
  }
  if (in.family == "plane_wave") return dynamics::plane_wave(g, in.mode);
  if (in.family == "modes") return dynamics::mode_superposition(g, in.modes);
  if (in.family == "random_modes")
    return dynamics::mode_superposition(g, dynamics::random_phase_modes(g.dim(), in.max_mode, in.seed.value_or(s.seed)));
  throw ConfigError("initial_state.family: " + in.family + " does not describe a scalar profile");
}

template <class State>
State build_initial_state(const RunSpec& s, const SystemModel& m);

template <>
inline ComplexScalarField build_initial_state<ComplexScalarField>(const RunSpec& s, const SystemModel& m) {
  if (s.initial.family != "file") return scalar_profile(s, m.grid);
  const auto rows = detail::read_table_rows(detail::resolve(s, s.initial.file));
  if (rows.size() != m.grid.size()) throw ConfigError("initial state file does not have one line per grid node");
  ComplexScalarField psi(m.grid);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k].size() != 2) throw ConfigError("initial state file needs re,im per line for a scalar system");
    psi.values[k] = cplx(rows[k][0], rows[k][1]);
  }
  normalize(psi);
  return psi;
}

template <>
inline SpinorField build_initial_state<SpinorField>(const RunSpec& s, const SystemModel& m) {
  const auto& in = s.initial;
  if (in.family == "dirac_plane_wave")
    return dynamics::dirac_plane_wave(m.grid, m.constants, m.masses[0], in.mode[0], in.positive);
  if (in.family == "dirac_packet")
    return dynamics::dirac_positive_energy_packet(m.grid, m.constants, m.masses[0],
                                                  {in.center.at(0), in.width.at(0), in.momentum.at(0)});
  if (in.family == "file") {
    const auto rows = detail::read_table_rows(detail::resolve(s, in.file));
    if (rows.size() != m.grid.size()) throw ConfigError("initial state file does not have one line per grid node");
    SpinorField psi(m.grid);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != 4) throw ConfigError("initial state file needs re0,im0,re1,im1 per line for a spinor");
      psi.comps[0][k] = cplx(rows[k][0], rows[k][1]);
      psi.comps[1][k] = cplx(rows[k][2], rows[k][3]);
    }
    normalize(psi);
    return psi;
  }
  return dynamics::spinor_from_scalar(scalar_profile(s, m.grid), in.spin[0], in.spin[1]);
}

/// Propagates with the stepper the spec names.
template <class State>
guidance::PilotRun<State> propagate_spec(const RunSpec& s, const SystemModel& m, const State& psi0) {
  const long n = s.n_steps();
  if constexpr (std::is_same_v<State, ComplexScalarField>) {
    if (s.stepper == "crank_nicolson")
      return guidance::simulate(m, psi0, dynamics::CrankNicolson1D(m), s.dt, n, s.snapshot_stride);
    return guidance::simulate(m, psi0, dynamics::Rk4Stepper<dynamics::ScalarHamiltonian>(m), s.dt, n,
                              s.snapshot_stride);
  } else {
    if (m.kind == SystemKind::Pauli2D)
      return guidance::simulate(m, psi0, dynamics::Rk4Stepper<dynamics::PauliHamiltonian>(m), s.dt, n,
                                s.snapshot_stride);
    return guidance::simulate(m, psi0, dynamics::Rk4Stepper<dynamics::DiracHamiltonian>(m), s.dt, n,
                              s.snapshot_stride);
  }
}

namespace detail {

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline std::vector<std::pair<std::string, std::string>> run_metadata(const RunSpec& s) {
  return {{"system", to_string(s.system)},
          {"dt", format_number(s.dt)},
          {"snapshot_stride", std::to_string(s.snapshot_stride)},
          {"stepper", s.stepper},
          {"reference_gauge", "ln one(t0) = 0"}};
}

/// Writes outputs for one run, recording file names and degraded reasons.
class Context {
 public:
  Context(const RunSpec& spec, std::filesystem::path dir, RunOutcome& out)
      : spec_(spec), dir_(std::move(dir)), out_(out) {}

  const RunSpec& spec() const { return spec_; }
  std::filesystem::path file(const std::string& name) {
    out_.files.push_back(name);
    return dir_ / name;
  }
  void degrade(const std::string& why) { out_.degraded.push_back(why); }

 private:
  const RunSpec& spec_;
  std::filesystem::path dir_;
  RunOutcome& out_;
};

inline Json snapshot_summary(const weylscale::DensitySnapshot& d) {
  return {{"t", d.t},
          {"method", weylscale::to_string(d.method)},
          {"conserved_norm", weylscale::total_norm(d)},
          {"born_norm", weylscale::total_norm(d.born, d.grid)},
          {"unreliable_fraction", d.unreliable_fraction},
          {"degraded", d.degraded}};
}

template <class State>
Json run_density(Context& ctx, const guidance::PilotRun<State>& run, const DensityExperiment& e,
                 const std::string& tag) {
  const GridSpec& g = run.model.grid;
  std::vector<std::string> cols{"x"};
  if (g.dim() == 2) cols.push_back("y");
  for (const char* c : {"t", "born", "ln_one", "conserved", "unreliable"}) cols.emplace_back(c);
  Json list = Json::array();
  for (const auto& m : e.methods) {
    const auto method = m == "comoving" ? weylscale::DensityMethod::Comoving : weylscale::DensityMethod::Backward;
    auto meta = run_metadata(ctx.spec());
    meta.emplace_back("reconstruction", m);
    CsvWriter w(ctx.file(tag + "_" + m + ".csv"), CsvSchema{"density", meta, cols});
    for (double t : e.times) {
      const auto d = weylscale::conserved_density_grid(run, t, method, ctx.spec().integrator);
      for (std::size_t k = 0; k < g.size(); ++k) {
        const Point p = g.node(k);
        std::vector<double> row{p[0]};
        if (g.dim() == 2) row.push_back(p[1]);
        row.insert(row.end(), {d.t, d.born[k], d.ln_one[k], d.rho[k], d.flagged[k] ? 1.0 : 0.0});
        w.row(row);
      }
      list.push_back(snapshot_summary(d));
      if (d.degraded) ctx.degrade(tag + ": " + m + " snapshot at t = " + format_number(t) + " is degraded");
    }
    w.close();
  }
  return {{"snapshots", list}};
}

inline std::vector<std::string> trajectory_columns(int dim) {
  std::vector<std::string> c{"seed_index", "t", "x"};
  if (dim == 2) c.emplace_back("y");
  c.emplace_back("x_unwrapped");
  if (dim == 2) c.emplace_back("y_unwrapped");
  c.emplace_back("ln_one");
  c.emplace_back("flagged");
  return c;
}

inline void write_paths(CsvWriter& w, const std::vector<guidance::Trajectory>& paths, int dim, double t0, double sdt) {
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (const auto& s : paths[i].samples) {
      const double u = (s.t - t0) / sdt;
      if (std::abs(u - std::round(u)) > 1e-6) continue;
      std::vector<double> row{static_cast<double>(i), s.t, s.q[0]};
      if (dim == 2) row.push_back(s.q[1]);
      row.push_back(s.q_unwrapped[0]);
      if (dim == 2) row.push_back(s.q_unwrapped[1]);
      row.push_back(s.ln_one);
      row.push_back(s.flagged ? 1.0 : 0.0);
      w.row(row);
    }
}

inline Json path_summary(const std::vector<Point>& seeds, const std::vector<guidance::Trajectory>& paths, int dim) {
  Json list = Json::array();
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto& b = paths[i].back();
    list.push_back({{"seed", dim == 1 ? Json::array({seeds[i][0]}) : Json::array({seeds[i][0], seeds[i][1]})},
                    {"end", dim == 1 ? Json::array({b.q[0]}) : Json::array({b.q[0], b.q[1]})},
                    {"ln_one_end", b.ln_one},
                    {"steps", paths[i].steps()},
                    {"flagged_steps", paths[i].flagged_steps},
                    {"unreliable", paths[i].unreliable()}});
  }
  return list;
}

inline double unreliable_share(const std::vector<guidance::Trajectory>& paths) {
  std::size_t bad = 0;
  for (const auto& p : paths) bad += p.unreliable() ? 1 : 0;
  return paths.empty() ? 0.0 : static_cast<double>(bad) / static_cast<double>(paths.size());
}

template <class State>
Json run_trajectories(Context& ctx, const guidance::PilotRun<State>& run, const TrajectoryExperiment& e,
                      const std::string& tag) {
  const auto& tl = run.timeline;
  const double t1 = e.t_end.value_or(tl.t_end());
  const int dim = run.model.grid.dim();
  std::vector<guidance::Trajectory> paths(e.seeds.size());
  parallel_for(paths.size(), [&](std::size_t i) {
    paths[i] = guidance::integrate_trajectory(run.flow, e.seeds[i], tl.t0, t1, ctx.spec().integrator);
  });
  CsvWriter w(ctx.file(tag + ".csv"), CsvSchema{"trajectories", run_metadata(ctx.spec()), trajectory_columns(dim)});
  write_paths(w, paths, dim, tl.t0, tl.snapshot_dt());
  w.close();
  const double share = unreliable_share(paths);
  if (share > weylscale::kDegradedFraction)
    ctx.degrade(tag + ": " + format_number(share) + " of the trajectories are unreliable");
  return {{"t_end", t1}, {"unreliable_fraction", share}, {"paths", path_summary(e.seeds, paths, dim)}};
}

inline Json report_json(const gauge::InvarianceReport& r) {
  return {{"max_deviation", r.max_deviation},
          {"compared", r.compared},
          {"mask_mismatch", r.mask_mismatch},
          {"degraded", r.degraded}};
}

inline Json run_gauge_check(Context& ctx, const guidance::PilotRun<ComplexScalarField>& run,
                            const GaugeCheckExperiment& e, const std::string& tag) {
  const auto lambda = gauge::GaugeFunction::parse(e.lambda);
  const auto& s = ctx.spec();
  const auto twin =
      s.stepper == "crank_nicolson"
          ? gauge::propagate_twin(run, lambda, [](const SystemModel& m) { return dynamics::CrankNicolson1D(m); })
          : gauge::propagate_twin(run, lambda, [](const SystemModel& m) {
              return dynamics::Rk4Stepper<dynamics::ScalarHamiltonian>(m);
            });
  const auto& tl = run.timeline;
  const auto vel = gauge::check_velocity_invariance(run, twin, e.time);
  const auto traj = gauge::check_trajectory_invariance(run, twin, e.seeds, tl.t0, e.time, s.integrator);
  const auto dens = gauge::check_density_invariance(run, twin, lambda, e.time, weylscale::DensityMethod::Backward,
                                                    s.integrator);
  const auto qp = gauge::check_quantum_potential_invariance(tl.at(e.time), run.model, lambda);
  if (traj.degraded) ctx.degrade(tag + ": some twin trajectories are unreliable");
  if (dens.degraded) ctx.degrade(tag + ": a conserved-density snapshot is degraded");
  return {{"lambda", e.lambda},
          {"time", e.time},
          {"velocity", report_json(vel)},
          {"trajectory_endpoints", report_json(traj)},
          {"conserved_density", report_json(dens)},
          {"quantum_potential", report_json(qp)}};
}

inline Json run_relax(Context& ctx, const RelaxExperiment& e, const std::string& tag) {
  auto cfg = e.config;
  if (!e.sample_seed_given) cfg.sample_seed = ctx.spec().seed;
  const auto res = equilibrium::relaxation_experiment(cfg);
  CsvWriter w(ctx.file(tag + ".csv"),
              CsvSchema{"relaxation",
                        {{"h", "coarse-grained relative entropy against |psi|^2 on the cell partition"},
                         {"interval", "basic bootstrap, confidence " + format_number(cfg.confidence)},
                         {"noise_band", "null-ensemble quantile, confidence " + format_number(cfg.noise_confidence)}},
                        {"t", "h", "ci_lower", "ci_upper", "noise_band", "unreliable_fraction", "degraded"}});
  Json series = Json::array();
  for (const auto& c : res.series) {
    w.row({c.t, c.h.value, c.ci.lower, c.ci.upper, c.noise_band, c.unreliable_fraction, c.degraded ? 1.0 : 0.0});
    series.push_back({{"t", c.t},
                      {"h", c.h.value},
                      {"ci", {c.ci.lower, c.ci.upper}},
                      {"noise_band", c.noise_band},
                      {"unreliable_fraction", c.unreliable_fraction},
                      {"degraded", c.degraded}});
  }
  w.close();
  if (res.any_degraded()) ctx.degrade(tag + ": more than 1% of the ensemble is unreliable");
  return {{"decrease", res.decrease()}, {"warnings", res.warnings}, {"series", series}};
}

inline Json run_uniqueness(Context& ctx, const guidance::PilotRun<ComplexScalarField>& run,
                           const UniquenessExperiment& e, const std::string& tag) {
  const auto r = equilibrium::uniqueness_experiment(run, e.epsilon, e.time, e.seeds, ctx.spec().integrator, e.cap);
  const GridSpec& g = run.model.grid;
  auto meta = run_metadata(ctx.spec());
  meta.emplace_back("epsilon", format_number(e.epsilon));
  CsvWriter w(ctx.file(tag + ".csv"),
              CsvSchema{"uniqueness", meta, {"x", "t", "rho_original", "rho_modified", "unreliable_modified"}});
  for (std::size_t k = 0; k < g.size(); ++k)
    w.row({g.coord(0, k), e.time, r.original.rho[k], r.modified.rho[k], r.modified.flagged[k] ? 1.0 : 0.0});
  w.close();
  if (!e.seeds.empty()) {
    const auto& tl = run.timeline;
    CsvWriter tw(ctx.file(tag + "_original_paths.csv"), CsvSchema{"trajectories", meta, trajectory_columns(1)});
    write_paths(tw, r.original_paths, 1, tl.t0, tl.snapshot_dt());
    tw.close();
    CsvWriter mw(ctx.file(tag + "_modified_paths.csv"), CsvSchema{"trajectories", meta, trajectory_columns(1)});
    write_paths(mw, r.modified_paths, 1, tl.t0, tl.snapshot_dt());
    mw.close();
  }
  if (r.degraded)
    ctx.degrade(tag + ": contamination " + format_number(r.contamination) + " or a degraded original snapshot");
  return {{"epsilon", r.epsilon},
          {"time", r.t},
          {"l1_distance", r.l1_distance},
          {"norm_original", r.norm_original},
          {"norm_modified", r.norm_modified},
          {"contamination", r.contamination},
          {"degraded", r.degraded}};
}

inline std::vector<Point> seed_range(double from, double to, double step) {
  std::vector<Point> out;
  const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back({from + step * static_cast<double>(i), 0.0});
  return out;
}

/// Trajectory fan, scale-factor grid and density grids of a 1D run.
inline Json run_figures(Context& ctx, const guidance::PilotRun<ComplexScalarField>& run, const FiguresExperiment& e) {
  const auto& s = ctx.spec();
  const auto& tl = run.timeline;
  auto meta = run_metadata(s);
  meta.emplace(meta.begin(), "preset", e.preset);
  const auto seeds = seed_range(e.seed_from, e.seed_to, e.seed_step);
  std::vector<guidance::Trajectory> paths(seeds.size());
  parallel_for(paths.size(), [&](std::size_t i) {
    paths[i] = guidance::integrate_trajectory(run.flow, seeds[i], tl.t0, tl.t_end(), s.integrator);
  });
  write_trajectories(ctx.file("trajectories.csv"), seeds, paths, tl.t0, tl.snapshot_dt(), trajectories_schema(meta));

  std::vector<weylscale::DensitySnapshot> snaps;
  Json list = Json::array();
  for (double t : e.times) {
    snaps.push_back(weylscale::conserved_density_grid(run, t, weylscale::DensityMethod::Backward, s.integrator));
    list.push_back(snapshot_summary(snaps.back()));
    if (snaps.back().degraded) ctx.degrade("figures: snapshot at t = " + format_number(t) + " is degraded");
  }
  write_scale_factor(ctx.file("scale_factor.csv"), snaps, scale_factor_schema(meta));
  write_densities(ctx.file("densities.csv"), snaps, densities_schema(meta));
  const double share = unreliable_share(paths);
  if (share > weylscale::kDegradedFraction)
    ctx.degrade("figures: " + format_number(share) + " of the fan trajectories are unreliable");
  return {{"preset", e.preset}, {"seeds", seeds.size()}, {"unreliable_fraction", share}, {"snapshots", list}};
}

template <class State>
Json run_experiment(Context& ctx, const guidance::PilotRun<State>& run, const Experiment& e, std::size_t index) {
  const std::string tag = std::string(experiment_name(e)) + "_" + std::to_string(index);
  return std::visit(
      [&](const auto& x) -> Json {
        using E = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<E, DensityExperiment>) {
          return run_density(ctx, run, x, tag);
        } else if constexpr (std::is_same_v<E, TrajectoryExperiment>) {
          return run_trajectories(ctx, run, x, tag);
        } else if constexpr (std::is_same_v<E, RelaxExperiment>) {
          return run_relax(ctx, x, tag);
        } else if constexpr (std::is_same_v<State, ComplexScalarField>) {
          if constexpr (std::is_same_v<E, GaugeCheckExperiment>) return run_gauge_check(ctx, run, x, tag);
          else if constexpr (std::is_same_v<E, UniquenessExperiment>) return run_uniqueness(ctx, run, x, tag);
          else return run_figures(ctx, run, x);
        } else {
          throw UnsupportedError(tag + " needs a scalar system");
        }
      },
      e);
}

template <class State>
void execute(Context& ctx, const SystemModel& model, Json& summary) {
  const auto& s = ctx.spec();
  const auto psi0 = build_initial_state<State>(s, model);
  const auto run = propagate_spec(s, model, psi0);
  const auto& tl = run.timeline;
  {
    CsvWriter w(ctx.file("norms.csv"), CsvSchema{"norms", run_metadata(s), {"step", "t", "born_norm"}});
    for (std::size_t i = 0; i < tl.norms.size(); ++i)
      w.row({static_cast<double>(i), tl.t0 + tl.dt * static_cast<double>(i), tl.norms[i]});
    w.close();
  }
  double drift = 0.0;
  for (double n : tl.norms) drift = std::max(drift, std::abs(n - tl.norms.front()));
  summary["propagation"] = {{"steps", tl.n_steps},
                            {"snapshots", tl.snapshots.size()},
                            {"born_norm_initial", tl.norms.front()},
                            {"born_norm_final", tl.norms.back()},
                            {"born_norm_max_drift", drift},
                            {"max_speed", run.flow.max_speed()}};
  Json results = Json::array();
  for (std::size_t i = 0; i < s.experiments.size(); ++i) {
    auto j = run_experiment(ctx, run, s.experiments[i], i);
    j["type"] = experiment_name(s.experiments[i]);
    results.push_back(std::move(j));
  }
  summary["experiments"] = results;
}

}  // namespace detail

/// Runs a validated spec: propagation, experiments, datasets, summary and manifest.
/// Throws on configuration errors and divergence (the manifest records the failure).
inline RunOutcome run(const RunSpec& spec, const std::optional<std::filesystem::path>& out_override = {}) {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome out;
  out.output_dir = out_override.value_or(std::filesystem::path(spec.output_dir));
  std::error_code ec;
  std::filesystem::create_directories(out.output_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + out.output_dir.string() + ": " + ec.message());
  detail::Context ctx(spec, out.output_dir, out);
  Json manifest;
  manifest["library"] = "pilotwave";
  manifest["version"] = kLibraryVersion;
  manifest["spec"] = spec_to_json(spec);
  manifest["conventions"] = conventions_json();
  manifest["threads"] = configure_threads();
  auto finish = [&](const std::string& status, const std::string& error) {
    const auto wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest["status"] = status;
    if (!error.empty()) manifest["error"] = error;
    manifest["exit_code"] = out.exit_code;
    manifest["degraded"] = out.degraded;
    manifest["wall_time_s"] = wall;
    manifest["outputs"] = out.files;
    detail::write_json(out.output_dir / "manifest.json", manifest);
  };
  try {
    const auto model = build_model(spec);
    Json summary;
    if (model.kind == SystemKind::Pauli2D || model.kind == SystemKind::Dirac1p1) {
      detail::execute<SpinorField>(ctx, model, summary);
    } else {
      detail::execute<ComplexScalarField>(ctx, model, summary);
    }
    out.exit_code = out.degraded.empty() ? kExitOk : kExitDegraded;
    summary["degraded"] = out.degraded;
    summary["exit_code"] = out.exit_code;
    detail::write_json(ctx.file("summary.json"), summary);
    out.summary = std::move(summary);
  } catch (const std::exception& e) {
    out.exit_code = exit_code_for(e);
    finish(out.exit_code == kExitDivergence ? "diverged" : "failed", e.what());
    throw;
  }
  finish(out.exit_code == kExitOk ? "ok" : "degraded", "");
  return out;
}

/// The sine-potential preset: N = 1024 on [-8 pi, 8 pi), e = 0, e_I = 1,
/// phi = sin x, unit Gaussian at rest, RK4 with dt = 1e-3 up to t = 5.
inline RunSpec sinx_preset_spec(const std::filesystem::path& out_dir) {
  RunSpec s;
  s.system = SystemKind::Schrodinger1D;
  s.points = {1024};
  s.lower = {-8.0 * std::numbers::pi};
  s.upper = {8.0 * std::numbers::pi};
  s.coupling = {ParticleCoupling{0.0, 1.0}};
  s.phi.expr = "sin(x)";
  s.a = {SourceDef{}};
  s.initial = InitialStateDef{};
  s.stepper = "rk4";
  s.dt = 1e-3;
  s.t_final = 5.0;
  s.snapshot_stride = 10;
  s.experiments = {FiguresExperiment{}};
  s.output_dir = out_dir.string();
  std::vector<std::string> errors;
  validate(s, errors);
  if (!errors.empty()) throw SpecError(errors);
  return s;
}

}  // namespace pilotwave::cli
