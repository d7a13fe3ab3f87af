#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pilotwave/dynamics/system.hpp"
#include "pilotwave/equilibrium/relaxation.hpp"
#include "pilotwave/equilibrium/uniqueness.hpp"
#include "pilotwave/guidance/trajectory.hpp"

namespace pilotwave::cli {

using Json = nlohmann::ordered_json;

/// Schema violations collected over a whole document.
class SpecError : public ConfigError {
 public:
  explicit SpecError(std::vector<std::string> problems)
      : ConfigError(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid run spec:";
    for (const auto& x : p) s += "\n  " + x;
    return s;
  }
  std::vector<std::string> problems_;
};

/// A real input: expression source or a table file with one value per node.
struct SourceDef {
  std::string expr = "0";
  std::string table;
};

struct InitialStateDef {
  std::string family = "gaussian";
  std::vector<double> center{0.0};
  std::vector<double> width{1.0};
  std::vector<double> momentum{0.0};
  std::array<cplx, 2> spin{cplx(1.0, 0.0), cplx(0.0, 0.0)};
  std::array<int, 2> mode{1, 0};
  std::vector<dynamics::Mode> modes;
  int max_mode = 2;
  std::optional<std::uint64_t> seed;  ///< falls back to the run seed
  bool positive = true;
  std::string file;
};

struct DensityExperiment {
  std::vector<double> times;
  std::vector<std::string> methods{"backward"};
};

struct TrajectoryExperiment {
  std::vector<Point> seeds;
  std::optional<double> t_end;
};

struct GaugeCheckExperiment {
  std::string lambda;
  double time = 1.0;
  std::vector<Point> seeds;
};

struct RelaxExperiment {
  equilibrium::RelaxationConfig config;
  bool sample_seed_given = false;  ///< otherwise the run seed is used
};

struct UniquenessExperiment {
  double epsilon = 0.05;
  double time = 2.0;
  std::vector<Point> seeds;
  double cap = equilibrium::kModifiedVelocityCap;
};

struct FiguresExperiment {
  std::string preset = "sinx";
  std::vector<double> times{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
  double seed_from = -5.0;
  double seed_to = 5.0;
  double seed_step = 0.05;
};

using Experiment = std::variant<DensityExperiment, TrajectoryExperiment, GaugeCheckExperiment, RelaxExperiment,
                                UniquenessExperiment, FiguresExperiment>;

inline const char* experiment_name(const Experiment& e) {
  static constexpr const char* names[] = {"density", "trajectories", "gauge_check", "relax", "uniqueness", "figures"};
  return names[e.index()];
}

struct RunSpec {
  SystemKind system = SystemKind::Schrodinger1D;
  std::vector<std::size_t> points{1024};
  std::vector<double> lower{-8.0 * std::numbers::pi};
  std::vector<double> upper{8.0 * std::numbers::pi};
  PhysicalConstants constants;
  std::vector<double> masses{1.0};
  std::vector<ParticleCoupling> coupling{ParticleCoupling{}};
  SourceDef phi;
  std::vector<SourceDef> a{SourceDef{}};
  std::string interaction;
  InitialStateDef initial;
  std::string stepper = "rk4";
  double dt = 1e-3;
  double t_final = 1.0;
  long snapshot_stride = 10;
  guidance::IntegratorOptions integrator;
  std::vector<Experiment> experiments;
  std::uint64_t seed = 1;
  std::string output_dir = "pilotwave_out";
  std::filesystem::path base_dir = ".";  ///< directory relative table and state paths resolve against

  long n_steps() const { return static_cast<long>(std::llround(t_final / dt)); }
};

inline SystemKind system_from_string(const std::string& s) {
  for (auto k : {SystemKind::Schrodinger1D, SystemKind::TwoParticle1D, SystemKind::Pauli2D, SystemKind::Dirac1p1})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown system '" + s + "'");
}

namespace detail {

/// Reads typed fields from one JSON object, recording every problem under its dotted path.
class Reader {
 public:
  Reader(const Json& obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_.is_object()) fail("", "must be an object");
  }

  /// Unknown keys are errors.
  void allow(std::initializer_list<const char*> keys) {
    if (!obj_.is_object()) return;
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : obj_.items())
      if (!ok.count(k)) fail(k, "unknown key");
  }

  bool has(const char* key) const { return obj_.is_object() && obj_.contains(key); }
  const Json& at(const char* key) const { return obj_.at(key); }
  std::string path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void fail(const std::string& key, const std::string& msg) {
    errors_.push_back((key.empty() ? (path_.empty() ? std::string("<root>") : path_) : path(key.c_str())) + ": " +
                      msg);
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    convert(obj_.at(key), out, key);
  }

  template <class T>
  void require(const char* key, T& out) {
    if (!has(key)) {
      fail(key, "is required");
      return;
    }
    convert(obj_.at(key), out, key);
  }

  template <class T>
  bool convert(const Json& j, T& out, const std::string& key) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!j.is_number()) throw std::invalid_argument("expected a number");
        out = j.get<double>();
        if (!std::isfinite(out)) throw std::invalid_argument("must be finite");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!j.is_boolean()) throw std::invalid_argument("expected true or false");
        out = j.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_integer()) throw std::invalid_argument("expected an integer");
        if (std::is_unsigned_v<T> && j.get<long long>() < 0 && !j.is_number_unsigned())
          throw std::invalid_argument("must be non-negative");
        out = j.get<T>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!j.is_string()) throw std::invalid_argument("expected a string");
        out = j.get<std::string>();
      } else {
        if (!j.is_array()) throw std::invalid_argument("expected an array");
        T v;
        std::size_t i = 0;
        for (const auto& e : j) {
          typename T::value_type x{};
          if (!convert(e, x, key + "[" + std::to_string(i++) + "]")) return false;
          v.push_back(x);
        }
        out = std::move(v);
      }
      return true;
    } catch (const std::exception& e) {
      fail(key, e.what());
      return false;
    }
  }

 private:
  const Json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
};

inline void read_source(const Json& j, SourceDef& out, const std::string& path, std::vector<std::string>& errors) {
  if (j.is_string()) {
    out.expr = j.get<std::string>();
    out.table.clear();
    return;
  }
  if (j.is_number()) {
    out.expr = Json(j.get<double>()).dump();
    return;
  }
  Reader r(j, path, errors);
  r.allow({"table"});
  r.require("table", out.table);
}

inline std::vector<Point> read_points(const Json& j, const std::string& path, std::vector<std::string>& errors) {
  std::vector<Point> out;
  if (j.is_object()) {
    Reader r(j, path, errors);
    r.allow({"from", "to", "step"});
    double from = 0.0, to = 0.0, step = 0.0;
    r.require("from", from);
    r.require("to", to);
    r.require("step", step);
    if (!(step > 0.0) || to < from) {
      r.fail("step", "range needs step > 0 and to >= from");
      return out;
    }
    const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back({from + step * static_cast<double>(i), 0.0});
    return out;
  }
  if (!j.is_array()) {
    errors.push_back(path + ": expected an array of points or a {from, to, step} range");
    return out;
  }
  for (const auto& p : j) {
    if (p.is_number()) {
      out.push_back({p.get<double>(), 0.0});
    } else if (p.is_array() && (p.size() == 1 || p.size() == 2) && p[0].is_number() &&
               (p.size() == 1 || p[1].is_number())) {
      out.push_back({p[0].get<double>(), p.size() == 2 ? p[1].get<double>() : 0.0});
    } else {
      errors.push_back(path + ": each point must be a number or [x] / [x, y]");
      return out;
    }
  }
  return out;
}

inline bool read_complex(const Json& j, cplx& z) {
  if (j.is_number()) {
    z = cplx(j.get<double>(), 0.0);
    return true;
  }
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    z = cplx(j[0].get<double>(), j[1].get<double>());
    return true;
  }
  return false;
}

inline void read_initial(const Json& j, InitialStateDef& s, std::vector<std::string>& errors) {
  Reader r(j, "initial_state", errors);
  r.allow({"family", "center", "width", "momentum", "spin", "mode", "modes", "max_mode", "seed", "positive", "file"});
  r.get("family", s.family);
  auto scalar_or_list = [&](const char* key, std::vector<double>& out) {
    if (!r.has(key)) return;
    if (r.at(key).is_number()) {
      out = {r.at(key).get<double>()};
    } else {
      r.get(key, out);
    }
  };
  scalar_or_list("center", s.center);
  scalar_or_list("width", s.width);
  scalar_or_list("momentum", s.momentum);
  if (r.has("spin")) {
    const auto& sp = r.at("spin");
    if (!(sp.is_array() && sp.size() == 2 && read_complex(sp[0], s.spin[0]) && read_complex(sp[1], s.spin[1])))
      r.fail("spin", "expected [up, down] with each entry a number or [re, im]");
  }
  if (r.has("mode")) {
    std::vector<int> m;
    r.get("mode", m);
    if (m.empty() || m.size() > 2) {
      r.fail("mode", "expected one or two integers");
    } else {
      s.mode = {m[0], m.size() > 1 ? m[1] : 0};
    }
  }
  if (r.has("modes")) {
    const auto& ms = r.at("modes");
    if (!ms.is_array()) {
      r.fail("modes", "expected an array");
    } else {
      std::size_t i = 0;
      for (const auto& m : ms) {
        Reader mr(m, "initial_state.modes[" + std::to_string(i++) + "]", errors);
        mr.allow({"n", "amplitude"});
        std::vector<int> n;
        mr.require("n", n);
        cplx amp(1.0, 0.0);
        if (mr.has("amplitude") && !read_complex(mr.at("amplitude"), amp)) mr.fail("amplitude", "expected a number or [re, im]");
        if (n.empty() || n.size() > 2) {
          mr.fail("n", "expected one or two integers");
          continue;
        }
        s.modes.push_back(dynamics::Mode{{n[0], n.size() > 1 ? n[1] : 0}, amp});
      }
    }
  }
  r.get("max_mode", s.max_mode);
  if (r.has("seed")) {
    std::uint64_t v = 0;
    r.get("seed", v);
    s.seed = v;
  }
  r.get("positive", s.positive);
  r.get("file", s.file);
  static const std::set<std::string> families{"gaussian", "plane_wave", "modes", "random_modes",
                                              "dirac_plane_wave", "dirac_packet", "file"};
  if (!families.count(s.family)) r.fail("family", "unknown family '" + s.family + "'");
  if (s.family == "file" && s.file.empty()) r.fail("file", "is required for the file family");
  if (s.family == "modes" && s.modes.empty()) r.fail("modes", "is required for the modes family");
  for (double w : s.width)
    if (!(w > 0.0)) r.fail("width", "must be positive");
}

inline equilibrium::RelaxationConfig read_relax(const Reader&, const Json& j, const std::string& path,
                                                std::vector<std::string>& errors) {
  equilibrium::RelaxationConfig c;
  Reader r(j, path, errors);
  r.allow({"type", "grid_points", "max_mode", "state", "plane_wave_mode", "initial", "state_seed", "samples",
           "sample_seed", "cells", "dt", "stride", "t_final", "checkpoints", "bootstrap_resamples"});
  r.get("grid_points", c.grid_points);
  r.get("max_mode", c.max_mode);
  r.get("state_seed", c.state_seed);
  r.get("samples", c.samples);
  r.get("sample_seed", c.sample_seed);
  r.get("cells", c.cells);
  r.get("dt", c.dt);
  r.get("stride", c.stride);
  r.get("t_final", c.t_final);
  r.get("checkpoints", c.checkpoints);
  r.get("bootstrap_resamples", c.bootstrap_resamples);
  std::string state = "random_modes", initial = "uniform";
  r.get("state", state);
  r.get("initial", initial);
  if (state == "plane_wave") {
    c.state = equilibrium::RelaxationState::PlaneWave;
  } else if (state != "random_modes") {
    r.fail("state", "expected random_modes or plane_wave");
  }
  if (r.has("plane_wave_mode")) {
    std::vector<int> m;
    r.get("plane_wave_mode", m);
    if (m.size() == 2) {
      c.plane_wave_mode = {m[0], m[1]};
    } else {
      r.fail("plane_wave_mode", "expected two integers");
    }
  }
  if (initial == "equilibrium") {
    c.initial = equilibrium::InitialEnsemble::Equilibrium;
  } else if (initial != "uniform") {
    r.fail("initial", "expected uniform or equilibrium");
  }
  if (!(c.dt > 0.0)) r.fail("dt", "must be positive");
  if (!(c.t_final > 0.0)) r.fail("t_final", "must be positive");
  if (c.stride < 1) r.fail("stride", "must be at least 1");
  if (c.checkpoints < 2) r.fail("checkpoints", "must be at least 2");
  if (c.samples == 0) r.fail("samples", "must be positive");
  if (c.cells == 0 || c.grid_points % c.cells != 0 || c.grid_points / c.cells < 4)
    r.fail("cells", "must divide grid_points into cells of at least 4 points");
  return c;
}

inline Experiment read_experiment(const Json& j, std::size_t index, std::vector<std::string>& errors) {
  const std::string path = "experiments[" + std::to_string(index) + "]";
  Reader r(j, path, errors);
  std::string type;
  r.require("type", type);
  if (type == "density") {
    r.allow({"type", "times", "methods"});
    DensityExperiment e;
    r.require("times", e.times);
    r.get("methods", e.methods);
    for (const auto& m : e.methods)
      if (m != "backward" && m != "comoving") r.fail("methods", "unknown method '" + m + "'");
    return e;
  }
  if (type == "trajectories") {
    r.allow({"type", "seeds", "t_end"});
    TrajectoryExperiment e;
    if (r.has("seeds")) {
      e.seeds = read_points(r.at("seeds"), r.path("seeds"), errors);
    } else {
      r.fail("seeds", "is required");
    }
    if (r.has("t_end")) {
      double t = 0.0;
      r.get("t_end", t);
      e.t_end = t;
    }
    return e;
  }
  if (type == "gauge_check") {
    r.allow({"type", "lambda", "time", "seeds"});
    GaugeCheckExperiment e;
    r.require("lambda", e.lambda);
    r.get("time", e.time);
    if (r.has("seeds")) e.seeds = read_points(r.at("seeds"), r.path("seeds"), errors);
    return e;
  }
  if (type == "relax") return RelaxExperiment{read_relax(r, j, path, errors), r.has("sample_seed")};
  if (type == "uniqueness") {
    r.allow({"type", "epsilon", "time", "seeds", "cap"});
    UniquenessExperiment e;
    r.get("epsilon", e.epsilon);
    r.get("time", e.time);
    r.get("cap", e.cap);
    if (r.has("seeds")) e.seeds = read_points(r.at("seeds"), r.path("seeds"), errors);
    if (!(e.cap > 0.0)) r.fail("cap", "must be positive");
    return e;
  }
  if (type == "figures") {
    r.allow({"type", "preset", "times", "seed_from", "seed_to", "seed_step"});
    FiguresExperiment e;
    r.get("preset", e.preset);
    r.get("times", e.times);
    r.get("seed_from", e.seed_from);
    r.get("seed_to", e.seed_to);
    r.get("seed_step", e.seed_step);
    if (e.preset != "sinx") r.fail("preset", "only the sinx preset is available");
    if (!(e.seed_step > 0.0) || e.seed_to < e.seed_from) r.fail("seed_step", "seed range needs step > 0 and to >= from");
    return e;
  }
  if (!type.empty()) r.fail("type", "unknown experiment type '" + type + "'");
  return DensityExperiment{};
}

}  // namespace detail

/// Cross-field checks that need the whole spec.
inline void validate(const RunSpec& s, std::vector<std::string>& errors) {
  const bool two_d = s.system == SystemKind::TwoParticle1D || s.system == SystemKind::Pauli2D;
  const std::size_t dim = two_d ? 2 : 1;
  const std::size_t np = s.system == SystemKind::TwoParticle1D ? 2 : 1;
  const std::string sys = to_string(s.system);
  if (s.points.size() != dim || s.lower.size() != dim || s.upper.size() != dim)
    errors.push_back("grid: " + sys + " needs a " + std::to_string(dim) + "D grid (points, lower, upper)");
  for (std::size_t a = 0; a < std::min({s.points.size(), s.lower.size(), s.upper.size()}); ++a) {
    if (s.points[a] < 16) errors.push_back("grid.points: each axis needs at least 16 points");
    if (!(s.upper[a] > s.lower[a])) errors.push_back("grid.upper: must exceed grid.lower");
  }
  if (two_d && s.points.size() == 2 && s.system == SystemKind::TwoParticle1D &&
      (s.points[0] != s.points[1] || s.lower[0] != s.lower[1] || s.upper[0] != s.upper[1]))
    errors.push_back("grid: both particles must share the same line (equal axes)");
  if (!(s.constants.hbar > 0.0)) errors.push_back("constants.hbar: must be positive");
  if (!(s.constants.c > 0.0)) errors.push_back("constants.c: must be positive");
  if (s.masses.size() != np) errors.push_back("masses: expected " + std::to_string(np) + " value(s)");
  for (double m : s.masses)
    if (!(m > 0.0)) errors.push_back("masses: must be positive");
  if (s.coupling.size() != np) errors.push_back("coupling: expected " + std::to_string(np) + " entr(ies)");
  const std::size_t adim = s.system == SystemKind::Pauli2D ? 2 : 1;
  if (s.a.size() != adim) errors.push_back("gauge.A: expected " + std::to_string(adim) + " component(s)");
  if (!s.interaction.empty() && s.system != SystemKind::TwoParticle1D)
    errors.push_back("interaction: only the two_particle1d system has an interaction");
  if (!(s.dt > 0.0)) errors.push_back("dt: must be positive");
  if (!(s.t_final >= 0.0)) errors.push_back("t_final: must be non-negative");
  if (s.snapshot_stride < 1) errors.push_back("snapshot_stride: must be at least 1");
  if (s.dt > 0.0 && s.t_final >= 0.0) {
    const double n = s.t_final / s.dt;
    if (std::abs(n - std::round(n)) > 1e-6 * std::max(1.0, n)) errors.push_back("t_final: must be a multiple of dt");
    else if (s.snapshot_stride >= 1 && s.n_steps() % s.snapshot_stride != 0)
      errors.push_back("snapshot_stride: must divide t_final / dt");
  }
  if (s.stepper != "rk4" && s.stepper != "crank_nicolson") errors.push_back("stepper: expected rk4 or crank_nicolson");
  if (s.stepper == "crank_nicolson" && s.system != SystemKind::Schrodinger1D)
    errors.push_back("stepper: crank_nicolson is only available for schrodinger1d");
  const auto& f = s.initial.family;
  if ((f == "dirac_plane_wave" || f == "dirac_packet") && s.system != SystemKind::Dirac1p1)
    errors.push_back("initial_state.family: " + f + " needs the dirac1p1 system");
  if (f == "gaussian" && (s.initial.center.size() != dim || s.initial.width.size() != dim ||
                          s.initial.momentum.size() != dim))
    errors.push_back("initial_state: gaussian needs center, width and momentum with " + std::to_string(dim) +
                     " entr(ies)");
  if (f == "random_modes" && s.initial.max_mode < 1) errors.push_back("initial_state.max_mode: must be at least 1");
  const double t_end = s.t_final;
  auto on_lattice = [&](double t) {
    const double sdt = s.dt * static_cast<double>(s.snapshot_stride);
    const double u = t / sdt;
    return t >= 0.0 && t <= t_end + 1e-12 && std::abs(u - std::round(u)) < 1e-6;
  };
  for (std::size_t i = 0; i < s.experiments.size(); ++i) {
    const std::string p = "experiments[" + std::to_string(i) + "]";
    std::visit(
        [&](const auto& e) {
          using E = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<E, DensityExperiment>) {
            if (e.times.empty()) errors.push_back(p + ".times: must not be empty");
            for (double t : e.times)
              if (!on_lattice(t)) errors.push_back(p + ".times: " + std::to_string(t) + " is not a stored snapshot time");
            for (const auto& m : e.methods)
              if (m == "comoving" && dim != 1) errors.push_back(p + ".methods: comoving needs a 1D system");
          } else if constexpr (std::is_same_v<E, TrajectoryExperiment>) {
            if (e.seeds.empty()) errors.push_back(p + ".seeds: must not be empty");
            if (e.t_end && (*e.t_end < 0.0 || *e.t_end > t_end + 1e-12))
              errors.push_back(p + ".t_end: must lie within [0, t_final]");
          } else if constexpr (std::is_same_v<E, GaugeCheckExperiment>) {
            if (!on_lattice(e.time) || e.time <= 0.0) errors.push_back(p + ".time: must be a positive snapshot time");
            if (s.system != SystemKind::Schrodinger1D)
              errors.push_back(p + ": gauge twin checks are offered for schrodinger1d");
          } else if constexpr (std::is_same_v<E, UniquenessExperiment>) {
            if (!on_lattice(e.time) || e.time <= 0.0) errors.push_back(p + ".time: must be a positive snapshot time");
            if (s.system != SystemKind::Schrodinger1D)
              errors.push_back(p + ": the uniqueness experiment needs schrodinger1d");
          } else if constexpr (std::is_same_v<E, FiguresExperiment>) {
            if (s.system != SystemKind::Schrodinger1D) errors.push_back(p + ": figures need schrodinger1d");
            for (double t : e.times)
              if (!on_lattice(t)) errors.push_back(p + ".times: " + std::to_string(t) + " is not a stored snapshot time");
          }
        },
        s.experiments[i]);
  }
}

/// Parses and validates a spec document; throws SpecError listing every problem.
inline RunSpec parse_run_spec(const Json& j, const std::filesystem::path& base_dir = ".") {
  std::vector<std::string> errors;
  RunSpec s;
  s.base_dir = base_dir;
  detail::Reader r(j, "", errors);
  r.allow({"system", "grid", "constants", "masses", "coupling", "gauge", "interaction", "initial_state", "stepper",
           "dt", "t_final", "snapshot_stride", "integrator", "experiments", "seed", "output_dir"});
  std::string system;
  r.require("system", system);
  try {
    if (!system.empty()) s.system = system_from_string(system);
  } catch (const ConfigError& e) {
    r.fail("system", e.what());
  }
  const bool two_particles = s.system == SystemKind::TwoParticle1D;
  if (two_particles) {
    s.masses = {1.0, 1.0};
    s.coupling = {ParticleCoupling{}, ParticleCoupling{}};
  }
  if (s.system == SystemKind::Pauli2D) s.a = {SourceDef{}, SourceDef{}};
  if (r.has("grid")) {
    detail::Reader g(r.at("grid"), "grid", errors);
    g.allow({"points", "lower", "upper"});
    g.require("points", s.points);
    g.require("lower", s.lower);
    g.require("upper", s.upper);
  } else {
    r.fail("grid", "is required");
  }
  if (r.has("constants")) {
    detail::Reader c(r.at("constants"), "constants", errors);
    c.allow({"hbar", "c"});
    c.get("hbar", s.constants.hbar);
    c.get("c", s.constants.c);
  }
  r.get("masses", s.masses);
  if (r.has("coupling")) {
    const auto& cj = r.at("coupling");
    const Json list = cj.is_array() ? cj : Json::array({cj});
    s.coupling.clear();
    std::size_t i = 0;
    for (const auto& e : list) {
      detail::Reader c(e, "coupling[" + std::to_string(i++) + "]", errors);
      c.allow({"e", "e_I"});
      ParticleCoupling pc;
      c.get("e", pc.e);
      c.get("e_I", pc.e_I);
      s.coupling.push_back(pc);
    }
  }
  if (r.has("gauge")) {
    detail::Reader g(r.at("gauge"), "gauge", errors);
    g.allow({"phi", "A"});
    if (g.has("phi")) detail::read_source(g.at("phi"), s.phi, "gauge.phi", errors);
    if (g.has("A")) {
      const auto& aj = g.at("A");
      if (!aj.is_array()) {
        g.fail("A", "expected an array with one entry per spatial axis");
      } else {
        s.a.clear();
        std::size_t i = 0;
        for (const auto& e : aj) {
          SourceDef d;
          detail::read_source(e, d, "gauge.A[" + std::to_string(i++) + "]", errors);
          s.a.push_back(d);
        }
      }
    }
  }
  r.get("interaction", s.interaction);
  if (r.has("initial_state")) detail::read_initial(r.at("initial_state"), s.initial, errors);
  r.get("stepper", s.stepper);
  r.require("dt", s.dt);
  r.require("t_final", s.t_final);
  r.get("snapshot_stride", s.snapshot_stride);
  if (r.has("integrator")) {
    detail::Reader ir(r.at("integrator"), "integrator", errors);
    ir.allow({"max_cells_per_step", "max_refinements"});
    ir.get("max_cells_per_step", s.integrator.max_cells_per_step);
    ir.get("max_refinements", s.integrator.max_refinements);
    if (!(s.integrator.max_cells_per_step > 0.0)) ir.fail("max_cells_per_step", "must be positive");
  }
  if (r.has("experiments")) {
    const auto& ej = r.at("experiments");
    if (!ej.is_array()) {
      r.fail("experiments", "expected an array");
    } else {
      for (std::size_t i = 0; i < ej.size(); ++i) s.experiments.push_back(detail::read_experiment(ej[i], i, errors));
    }
  }
  r.get("seed", s.seed);
  r.get("output_dir", s.output_dir);
  if (errors.empty()) validate(s, errors);
  if (!errors.empty()) throw SpecError(std::move(errors));
  return s;
}

/// Reads and validates a spec file. Relative paths inside resolve against its directory.
inline RunSpec load_run_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file " + path.string());
  Json j;
  try {
    j = Json::parse(in, nullptr, true, false);
  } catch (const Json::parse_error& e) {
    throw SpecError({std::string("malformed JSON: ") + e.what()});
  }
  return parse_run_spec(j, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace pilotwave::cli
