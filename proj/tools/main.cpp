// Scenario driver: validates a JSON config, dispatches to one of the four
// backends (finite, extended, ymh, gr), and writes CSV time series plus a
// JSON summary per run. Subcommands: run, sweep, check, plotscript.
//
// Exit codes: 0 success, 2 config validation error (message names the
// offending field), 3 numerical failure (non-convergence or a singular
// metric).

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clebsch/checkpoint.hpp"
#include "clebsch/core.hpp"
#include "clebsch/diagnostics.hpp"
#include "clebsch/errors.hpp"
#include "clebsch/extended.hpp"
#include "clebsch/gr.hpp"
#include "clebsch/initial_data.hpp"
#include "clebsch/integrate.hpp"
#include "clebsch/lattice.hpp"
#include "clebsch/lie.hpp"
#include "clebsch/spaces.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace clebsch;

namespace {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

struct FiniteSystem {
  double m = 1.0;
  double spring = 0.0;
  bool xi_coupling = false;
  Vec q0, p0;
  std::string xi_type = "constant";
  std::array<double, 3> xi_value{};
  double xi_rate = 1.0;
  Vec nu0;  // extended backend only
};

struct YmhSystem {
  int n = 2;
  double a = 1.0;
  double mu = 0.0;
  double v = 0.0;
  std::string init_type = "smooth_random";
  unsigned seed = 1;
  double amplitude = 0.1;
  std::string checkpoint_in;
  bool project = true;
};

struct GrSystem {
  std::string scenario = "kasner";
  std::array<double, 3> exponents = standard_kasner_exponents();
  double t0 = 1.0;
  double lapse = 1.0;
  unsigned seed = 1;
  std::array<double, 6> g0{1, 0, 0, 1, 0, 1};
  std::array<double, 6> pibar0{};
};

struct Config {
  std::string backend;
  std::string group;  // empty for gr
  double horizon = 0;
  StepperSpec stepper;
  std::string scheme_name = "rk4";
  int cadence = 1;
  std::string out_dir;
  std::string checkpoint_out;  // ymh only, empty if unused
  std::string sweep_metric = "energy";
  FiniteSystem fin;
  YmhSystem ymh;
  GrSystem gr;
  json normalized;
};

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ValidationError(field + ": " + msg);
}

void require_object(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
}

void reject_unknown(const json& obj, const std::string& prefix,
                    std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(prefix.empty() ? it.key() : prefix + "." + it.key(), "unknown field");
  }
}

double get_number(const json& obj, const std::string& prefix, const std::string& key,
                  std::optional<double> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    fail(prefix + key, "required field is missing");
  }
  const json& v = obj.at(key);
  if (!v.is_number()) fail(prefix + key, "expected a number");
  return v.get<double>();
}

long get_integer(const json& obj, const std::string& prefix, const std::string& key,
                 std::optional<long> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    fail(prefix + key, "required field is missing");
  }
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(prefix + key, "expected an integer");
  return v.get<long>();
}

bool get_bool(const json& obj, const std::string& prefix, const std::string& key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(prefix + key, "expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& prefix, const std::string& key,
                       std::optional<std::string> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    fail(prefix + key, "required field is missing");
  }
  const json& v = obj.at(key);
  if (!v.is_string()) fail(prefix + key, "expected a string");
  return v.get<std::string>();
}

Vec get_vector(const json& obj, const std::string& prefix, const std::string& key,
               std::size_t expect) {
  if (!obj.contains(key)) fail(prefix + key, "required field is missing");
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != expect)
    fail(prefix + key, "expected an array of " + std::to_string(expect) + " numbers");
  Vec out(expect);
  for (std::size_t i = 0; i < expect; ++i) {
    if (!v[i].is_number()) fail(prefix + key, "expected an array of numbers");
    out[i] = v[i].get<double>();
  }
  return out;
}

Group parse_group_name(const std::string& s) {
  if (s == "u1") return Group::u1;
  if (s == "so3") return Group::so3;
  if (s == "su2") return Group::su2;
  fail("group", "must be one of u1|so3|su2");
}

ConfigurationSpace space_for(Group g) {
  switch (g) {
    case Group::u1: return u1_plane_space();
    case Group::so3: return so3_vector_space();
    case Group::su2: return su2_adjoint_space();
  }
  throw std::logic_error("space_for: unreachable");
}

Config validate_config(const json& root, const std::string& default_dir) {
  require_object(root, "config");
  reject_unknown(root, "",
                 {"backend", "group", "horizon", "integrator", "system", "output", "sweep"});

  Config cfg;
  cfg.backend = get_string(root, "", "backend");
  if (cfg.backend != "finite" && cfg.backend != "extended" && cfg.backend != "ymh" &&
      cfg.backend != "gr")
    fail("backend", "must be one of finite|extended|ymh|gr");

  if (cfg.backend == "gr") {
    if (root.contains("group")) fail("group", "not accepted by the gr backend");
  } else {
    cfg.group = get_string(root, "", "group");
    parse_group_name(cfg.group);
    if (cfg.backend == "ymh" && cfg.group == "so3")
      fail("group", "so3 has no lattice fiber; use u1 or su2");
  }

  cfg.horizon = get_number(root, "", "horizon");
  if (!(cfg.horizon >= 0)) fail("horizon", "must be nonnegative");

  if (!root.contains("integrator")) fail("integrator", "required field is missing");
  const json& integ = root.at("integrator");
  require_object(integ, "integrator");
  reject_unknown(integ, "integrator", {"scheme", "dt", "newton_tol", "max_newton"});
  cfg.scheme_name = get_string(integ, "integrator.", "scheme", std::string("rk4"));
  if (cfg.scheme_name == "rk4")
    cfg.stepper.scheme = StepperSpec::Scheme::rk4;
  else if (cfg.scheme_name == "implicit_midpoint")
    cfg.stepper.scheme = StepperSpec::Scheme::implicit_midpoint;
  else
    fail("integrator.scheme", "must be rk4 or implicit_midpoint");
  cfg.stepper.dt = get_number(integ, "integrator.", "dt");
  if (!(cfg.stepper.dt > 0)) fail("integrator.dt", "must be positive");
  cfg.stepper.newton_tol = get_number(integ, "integrator.", "newton_tol", 1e-12);
  if (!(cfg.stepper.newton_tol > 0)) fail("integrator.newton_tol", "must be positive");
  cfg.stepper.max_newton = static_cast<int>(get_integer(integ, "integrator.", "max_newton", 50));
  if (cfg.stepper.max_newton < 1) fail("integrator.max_newton", "must be >= 1");

  const double steps = cfg.horizon / cfg.stepper.dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
    fail("horizon", "must be an integer multiple of integrator.dt");

  // output
  json out_norm = json::object();
  if (root.contains("output")) {
    const json& out = root.at("output");
    require_object(out, "output");
    reject_unknown(out, "output", {"cadence", "dir", "checkpoint"});
    cfg.cadence = static_cast<int>(get_integer(out, "output.", "cadence", 1));
    if (cfg.cadence < 1) fail("output.cadence", "must be >= 1");
    cfg.out_dir = get_string(out, "output.", "dir", default_dir);
    if (out.contains("checkpoint")) {
      if (cfg.backend != "ymh") fail("output.checkpoint", "only the ymh backend writes checkpoints");
      cfg.checkpoint_out = get_string(out, "output.", "checkpoint");
      if (cfg.checkpoint_out.empty()) fail("output.checkpoint", "must be a nonempty path");
    }
  } else {
    cfg.out_dir = default_dir;
  }
  if (cfg.out_dir.empty()) fail("output.dir", "must be a nonempty path");
  out_norm["cadence"] = cfg.cadence;
  out_norm["dir"] = cfg.out_dir;
  if (!cfg.checkpoint_out.empty()) out_norm["checkpoint"] = cfg.checkpoint_out;

  // sweep options
  if (root.contains("sweep")) {
    const json& sw = root.at("sweep");
    require_object(sw, "sweep");
    reject_unknown(sw, "sweep", {"metric"});
    cfg.sweep_metric = get_string(sw, "sweep.", "metric", std::string("energy"));
    if (cfg.sweep_metric != "energy" && cfg.sweep_metric != "constraint")
      fail("sweep.metric", "must be energy or constraint");
  }

  if (!root.contains("system")) fail("system", "required field is missing");
  const json& sys = root.at("system");
  require_object(sys, "system");
  json sys_norm = json::object();

  if (cfg.backend == "finite" || cfg.backend == "extended") {
    const Group g = parse_group_name(cfg.group);
    const ConfigurationSpace space = space_for(g);
    const std::size_t dim = static_cast<std::size_t>(space.dim);
    const std::size_t ad = static_cast<std::size_t>(algebra_dim(g));
    if (cfg.backend == "extended")
      reject_unknown(sys, "system",
                     {"m", "spring", "xi_coupling", "q0", "p0", "xi", "nu0"});
    else
      reject_unknown(sys, "system", {"m", "spring", "xi_coupling", "q0", "p0", "xi"});
    cfg.fin.m = get_number(sys, "system.", "m", 1.0);
    if (!(cfg.fin.m > 0)) fail("system.m", "must be positive");
    cfg.fin.spring = get_number(sys, "system.", "spring", 0.0);
    if (cfg.fin.spring < 0) fail("system.spring", "must be nonnegative");
    cfg.fin.xi_coupling = get_bool(sys, "system.", "xi_coupling", false);
    cfg.fin.q0 = get_vector(sys, "system.", "q0", dim);
    cfg.fin.p0 = get_vector(sys, "system.", "p0", dim);
    if (!sys.contains("xi")) fail("system.xi", "required field is missing");
    const json& xi = sys.at("xi");
    require_object(xi, "system.xi");
    reject_unknown(xi, "system.xi", {"type", "value", "rate"});
    cfg.fin.xi_type = get_string(xi, "system.xi.", "type", std::string("constant"));
    if (cfg.fin.xi_type != "constant" && cfg.fin.xi_type != "rotating")
      fail("system.xi.type", "must be constant or rotating");
    if (cfg.fin.xi_type == "rotating" && g == Group::u1)
      fail("system.xi.type", "rotating requires a nonabelian group");
    const Vec xv = get_vector(xi, "system.xi.", "value", ad);
    for (std::size_t i = 0; i < ad; ++i) cfg.fin.xi_value[i] = xv[i];
    cfg.fin.xi_rate = get_number(xi, "system.xi.", "rate", 1.0);
    if (cfg.backend == "extended") {
      if (sys.contains("nu0"))
        cfg.fin.nu0 = get_vector(sys, "system.", "nu0", ad);
      else
        cfg.fin.nu0.assign(ad, 0.0);
    }
    sys_norm["m"] = cfg.fin.m;
    sys_norm["spring"] = cfg.fin.spring;
    sys_norm["xi_coupling"] = cfg.fin.xi_coupling;
    sys_norm["q0"] = cfg.fin.q0;
    sys_norm["p0"] = cfg.fin.p0;
    sys_norm["xi"] = {{"type", cfg.fin.xi_type}, {"value", xv}, {"rate", cfg.fin.xi_rate}};
    if (cfg.backend == "extended") sys_norm["nu0"] = cfg.fin.nu0;
  } else if (cfg.backend == "ymh") {
    reject_unknown(sys, "system", {"n", "a", "mu", "v", "init", "project"});
    cfg.ymh.n = static_cast<int>(get_integer(sys, "system.", "n"));
    if (cfg.ymh.n < 2) fail("system.n", "must be >= 2");
    cfg.ymh.a = get_number(sys, "system.", "a", 1.0);
    if (!(cfg.ymh.a > 0)) fail("system.a", "must be positive");
    cfg.ymh.mu = get_number(sys, "system.", "mu", 0.0);
    cfg.ymh.v = get_number(sys, "system.", "v", 0.0);
    cfg.ymh.project = get_bool(sys, "system.", "project", true);
    if (!sys.contains("init")) fail("system.init", "required field is missing");
    const json& init = sys.at("init");
    require_object(init, "system.init");
    reject_unknown(init, "system.init", {"type", "seed", "amplitude", "path"});
    cfg.ymh.init_type = get_string(init, "system.init.", "type", std::string("smooth_random"));
    if (cfg.ymh.init_type == "smooth_random") {
      // any group
    } else if (cfg.ymh.init_type == "homogeneous") {
      if (cfg.group != "su2") fail("system.init.type", "homogeneous requires group su2");
    } else if (cfg.ymh.init_type == "pure_gauge") {
      if (cfg.group != "u1") fail("system.init.type", "pure_gauge requires group u1");
    } else if (cfg.ymh.init_type == "checkpoint") {
      cfg.ymh.checkpoint_in = get_string(init, "system.init.", "path");
    } else {
      fail("system.init.type", "must be smooth_random|homogeneous|pure_gauge|checkpoint");
    }
    cfg.ymh.seed = static_cast<unsigned>(get_integer(init, "system.init.", "seed", 1));
    cfg.ymh.amplitude = get_number(init, "system.init.", "amplitude", 0.1);
    if (!(cfg.ymh.amplitude > 0)) fail("system.init.amplitude", "must be positive");
    sys_norm["n"] = cfg.ymh.n;
    sys_norm["a"] = cfg.ymh.a;
    sys_norm["mu"] = cfg.ymh.mu;
    sys_norm["v"] = cfg.ymh.v;
    sys_norm["project"] = cfg.ymh.project;
    json init_norm = {{"type", cfg.ymh.init_type},
                      {"seed", cfg.ymh.seed},
                      {"amplitude", cfg.ymh.amplitude}};
    if (!cfg.ymh.checkpoint_in.empty()) init_norm["path"] = cfg.ymh.checkpoint_in;
    sys_norm["init"] = init_norm;
  } else {  // gr
    reject_unknown(sys, "system",
                   {"scenario", "exponents", "t0", "lapse", "seed", "g0", "pibar0"});
    cfg.gr.scenario = get_string(sys, "system.", "scenario", std::string("kasner"));
    if (cfg.gr.scenario != "kasner" && cfg.gr.scenario != "random_constraint" &&
        cfg.gr.scenario != "explicit")
      fail("system.scenario", "must be kasner|random_constraint|explicit");
    cfg.gr.lapse = get_number(sys, "system.", "lapse", 1.0);
    if (!(cfg.gr.lapse > 0)) fail("system.lapse", "must be positive");
    cfg.gr.seed = static_cast<unsigned>(get_integer(sys, "system.", "seed", 1));
    if (cfg.gr.scenario == "kasner") {
      if (sys.contains("exponents")) {
        const Vec e = get_vector(sys, "system.", "exponents", 3);
        for (int i = 0; i < 3; ++i) cfg.gr.exponents[static_cast<std::size_t>(i)] = e[static_cast<std::size_t>(i)];
      }
      cfg.gr.t0 = get_number(sys, "system.", "t0", 1.0);
      if (!(cfg.gr.t0 > 0)) fail("system.t0", "must be positive for the kasner scenario");
    } else {
      cfg.gr.t0 = get_number(sys, "system.", "t0", 0.0);
    }
    if (cfg.gr.scenario == "explicit") {
      const Vec g6 = get_vector(sys, "system.", "g0", 6);
      const Vec p6 = get_vector(sys, "system.", "pibar0", 6);
      for (int i = 0; i < 6; ++i) {
        cfg.gr.g0[static_cast<std::size_t>(i)] = g6[static_cast<std::size_t>(i)];
        cfg.gr.pibar0[static_cast<std::size_t>(i)] = p6[static_cast<std::size_t>(i)];
      }
      if (!mat3_is_spd(sym6_unpack(cfg.gr.g0.data())))
        fail("system.g0", "must be a positive-definite symmetric metric");
    } else {
      if (sys.contains("g0")) fail("system.g0", "only accepted by the explicit scenario");
      if (sys.contains("pibar0")) fail("system.pibar0", "only accepted by the explicit scenario");
    }
    sys_norm["scenario"] = cfg.gr.scenario;
    sys_norm["lapse"] = cfg.gr.lapse;
    sys_norm["seed"] = cfg.gr.seed;
    sys_norm["t0"] = cfg.gr.t0;
    if (cfg.gr.scenario == "kasner") sys_norm["exponents"] = cfg.gr.exponents;
    if (cfg.gr.scenario == "explicit") {
      sys_norm["g0"] = cfg.gr.g0;
      sys_norm["pibar0"] = cfg.gr.pibar0;
    }
  }

  cfg.normalized = json::object();
  cfg.normalized["backend"] = cfg.backend;
  if (!cfg.group.empty()) cfg.normalized["group"] = cfg.group;
  cfg.normalized["horizon"] = cfg.horizon;
  cfg.normalized["integrator"] = {{"scheme", cfg.scheme_name},
                                  {"dt", cfg.stepper.dt},
                                  {"newton_tol", cfg.stepper.newton_tol},
                                  {"max_newton", cfg.stepper.max_newton}};
  cfg.normalized["system"] = sys_norm;
  cfg.normalized["output"] = out_norm;
  cfg.normalized["sweep"] = {{"metric", cfg.sweep_metric}};
  return cfg;
}

json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError("config: cannot read " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ValidationError("config: " + path + " is not valid JSON (" + e.what() + ")");
  }
  return j;
}

Config load_config(const std::string& path) {
  const std::string stem = fs::path(path).stem().string();
  return validate_config(load_json_file(path), "runs/" + (stem.empty() ? "run" : stem));
}

// ---------------------------------------------------------------------------
// Scenario execution
// ---------------------------------------------------------------------------

struct RunResult {
  std::vector<std::string> columns;  // without the leading t
  TrajectoryRecord rec;
  double drift_energy = 0;
  double drift_constraint = 0;
  json extra = json::object();  // backend-specific summary entries
};

ClebschHamiltonian make_catalog_hamiltonian(double m, double spring, bool xi_coupling) {
  ClebschHamiltonian H;
  H.value = [m, spring, xi_coupling](const Vec& q, const Vec& p, const AlgebraElement& xi) {
    double h = dot(p, p) / (2.0 * m) + 0.5 * spring * dot(q, q);
    if (xi_coupling) h += 0.5 * (xi.c[0] * xi.c[0] + xi.c[1] * xi.c[1] + xi.c[2] * xi.c[2]);
    return h;
  };
  H.dq = [spring](const Vec& q, const Vec&, const AlgebraElement&) { return scaled(q, spring); };
  H.dp = [m](const Vec&, const Vec& p, const AlgebraElement&) { return scaled(p, 1.0 / m); };
  H.dxi = [xi_coupling](const Vec&, const Vec&, const AlgebraElement& xi) {
    return xi_coupling ? make_dual(xi.group, xi.c[0], xi.c[1], xi.c[2]) : dual_zero(xi.group);
  };
  H.is_G_invariant = true;
  H.is_xi_independent = !xi_coupling;
  return H;
}

XiFn make_xi_fn(Group g, const FiniteSystem& fin) {
  const AlgebraElement xi0 = make_algebra(g, fin.xi_value[0], fin.xi_value[1], fin.xi_value[2]);
  if (fin.xi_type == "constant") return [xi0](double) { return xi0; };
  const double rate = fin.xi_rate;
  return [xi0, rate, g](double t) {
    return adjoint(group_exp(basis_element(g, 2), rate * t), xi0);
  };
}

RunResult run_finite(const Config& cfg) {
  const Group g = parse_group_name(cfg.group);
  const ConfigurationSpace space = space_for(g);
  const ClebschHamiltonian H =
      make_catalog_hamiltonian(cfg.fin.m, cfg.fin.spring, cfg.fin.xi_coupling);
  const XiFn xi = make_xi_fn(g, cfg.fin);
  const std::size_t n = static_cast<std::size_t>(space.dim);
  const int ad = algebra_dim(g);
  const bool extended = cfg.backend == "extended";
  const ClebschHamiltonian Hext = extended_hamiltonian(space, H);

  Vec y0 = cfg.fin.q0;
  y0.insert(y0.end(), cfg.fin.p0.begin(), cfg.fin.p0.end());
  if (extended) y0.insert(y0.end(), cfg.fin.nu0.begin(), cfg.fin.nu0.end());

  Rhs rhs = [space, H, xi, n, ad, extended](double t, const Vec& y, Vec& dydt) {
    PhaseDerivative d;
    if (extended) {
      ExtendedState s;
      s.q.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
      s.p.assign(y.begin() + static_cast<std::ptrdiff_t>(n),
                 y.begin() + 2 * static_cast<std::ptrdiff_t>(n));
      s.xi = xi(t);
      s.nu = dual_zero(s.xi.group);
      for (int a = 0; a < ad; ++a)
        s.nu.c[static_cast<std::size_t>(a)] = y[2 * n + static_cast<std::size_t>(a)];
      s.t = t;
      d = extended_hamilton_rhs(space, H, s);
      for (int a = 0; a < ad; ++a) dydt[2 * n + static_cast<std::size_t>(a)] = 0.0;
    } else {
      ClebschState s;
      s.q.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
      s.p.assign(y.begin() + static_cast<std::ptrdiff_t>(n),
                 y.begin() + 2 * static_cast<std::ptrdiff_t>(n));
      s.xi = xi(t);
      s.t = t;
      d = clebsch_hamilton_rhs(space, H, s);
    }
    for (std::size_t i = 0; i < n; ++i) {
      dydt[i] = d.qdot[i];
      dydt[n + i] = d.pdot[i];
    }
  };

  RunResult res;
  res.columns = {"H"};
  res.columns.push_back("C_norm");
  if (extended) res.columns.push_back("nu_norm");
  for (int a = 0; a < ad; ++a) res.columns.push_back("J_" + std::to_string(a + 1));

  Diagnostics diag;
  diag.names = res.columns;
  diag.eval = [space, H, Hext, xi, n, ad, extended](double t, const Vec& y) {
    ClebschState s;
    s.q.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    s.p.assign(y.begin() + static_cast<std::ptrdiff_t>(n),
               y.begin() + 2 * static_cast<std::ptrdiff_t>(n));
    s.xi = xi(t);
    s.t = t;
    std::vector<double> row;
    const DualAlgebraElement J = momentum_map(space, s.q, s.p);
    if (extended) {
      row.push_back(Hext.value(s.q, s.p, s.xi));
      const DualAlgebraElement sec = H.dxi(s.q, s.p, s.xi) - J;
      row.push_back(dual_norm(sec));
      double nn = 0;
      for (int a = 0; a < ad; ++a) {
        const double x = y[2 * n + static_cast<std::size_t>(a)];
        nn += x * x;
      }
      row.push_back(std::sqrt(nn));
    } else {
      row.push_back(H.value(s.q, s.p, s.xi));
      row.push_back(dual_norm(J - H.dxi(s.q, s.p, s.xi)));
    }
    for (int a = 0; a < ad; ++a) row.push_back(J.c[static_cast<std::size_t>(a)]);
    return row;
  };

  IntegrationOptions opts;
  opts.cadence = cfg.cadence;
  res.rec = integrate(rhs, y0, 0.0, cfg.horizon, cfg.stepper, &diag, opts);
  return res;
}

LatticeState build_ymh_initial(const Config& cfg, double* t0, double* checkpoint_dt) {
  const Group g = parse_group_name(cfg.group);
  LatticeGeometry geom{cfg.ymh.n, cfg.ymh.a};
  *t0 = 0.0;
  *checkpoint_dt = 0.0;
  if (cfg.ymh.init_type == "checkpoint") {
    Checkpoint ck;
    try {
      ck = read_checkpoint(cfg.ymh.checkpoint_in);
    } catch (const std::runtime_error& e) {
      throw ValidationError(std::string("system.init.path: ") + e.what());
    }
    if (ck.state.group != g) fail("system.init.path", "checkpoint group does not match config");
    if (ck.state.geom.n != cfg.ymh.n || ck.state.geom.a != cfg.ymh.a)
      fail("system.init.path", "checkpoint lattice does not match config");
    *t0 = ck.state.t;
    *checkpoint_dt = ck.dt;
    return ck.state;
  }
  if (cfg.ymh.init_type == "smooth_random")
    return smooth_random_state(g, geom, cfg.ymh.seed, cfg.ymh.amplitude, cfg.ymh.project);
  if (cfg.ymh.init_type == "homogeneous")
    return homogeneous_su2_state(geom, cfg.ymh.seed, cfg.ymh.amplitude);
  return pure_gauge_u1_state(geom, cfg.ymh.seed, cfg.ymh.amplitude).state;
}

RunResult run_ymh(const Config& cfg, const fs::path& out_dir) {
  const Group g = parse_group_name(cfg.group);
  const HiggsPotential pot{cfg.ymh.mu, cfg.ymh.v};
  double t0 = 0, ck_dt = 0;
  LatticeState st0 = build_ymh_initial(cfg, &t0, &ck_dt);
  const int ad = algebra_dim(g);

  RunResult res;
  res.columns = {"H", "gauss_l2", "gauss_linf"};
  for (int a = 0; a < ad; ++a) res.columns.push_back("J_" + std::to_string(a + 1));

  auto work = std::make_shared<LatticeState>(st0);
  Diagnostics diag;
  diag.names = res.columns;
  diag.eval = [work, pot, ad](double t, const Vec& y) {
    flat_to_state(y, *work);
    work->t = t;
    std::vector<double> row;
    row.push_back(ymh_hamiltonian(*work, pot));
    const Vec J = gauss_residual(*work);
    const GaussNorms norms = gauss_norms(work->geom, work->group, J);
    row.push_back(norms.l2);
    row.push_back(norms.linf);
    const DualAlgebraElement total = total_gauss_charge(*work);
    for (int a = 0; a < ad; ++a) row.push_back(total.c[static_cast<std::size_t>(a)]);
    return row;
  };

  IntegrationOptions opts;
  opts.cadence = cfg.cadence;
  res.rec = integrate(make_ymh_rhs(st0, pot), state_to_flat(st0), t0, cfg.horizon, cfg.stepper,
                      &diag, opts);

  if (!cfg.checkpoint_out.empty()) {
    LatticeState fin = st0;
    flat_to_state(res.rec.states.back(), fin);
    fin.t = res.rec.times.back();
    fs::path ck_path = cfg.checkpoint_out;
    if (ck_path.is_relative()) ck_path = out_dir / ck_path;
    write_checkpoint(ck_path.string(), fin, cfg.stepper.dt, pot);
    res.extra["checkpoint"] = ck_path.string();
  }
  if (ck_dt > 0) res.extra["resumed_from_dt"] = ck_dt;
  return res;
}

RunResult run_gr(const Config& cfg) {
  AdmState s0;
  if (cfg.gr.scenario == "kasner") {
    s0 = kasner_state(cfg.gr.exponents, cfg.gr.t0, cfg.gr.lapse);
  } else if (cfg.gr.scenario == "random_constraint") {
    std::mt19937 rng(cfg.gr.seed);
    s0 = random_constraint_state(rng);
    s0.lapse = cfg.gr.lapse;
    s0.t = cfg.gr.t0;
  } else {
    s0.g = sym6_unpack(cfg.gr.g0.data());
    s0.pi_bar = sym6_unpack(cfg.gr.pibar0.data());
    s0.lapse = cfg.gr.lapse;
    s0.t = cfg.gr.t0;
  }

  RunResult res;
  res.columns = {"H", "ham_constraint", "diffeo_norm", "J_1", "J_2", "J_3"};

  const double lapse = cfg.gr.lapse;
  Diagnostics diag;
  diag.names = res.columns;
  diag.eval = [lapse](double t, const Vec& y) {
    AdmState s;
    adm_flat_to_state(y, s);
    s.lapse = lapse;
    s.t = t;
    const GrConstraints c = gr_constraints(s);
    const Vec3 J = gr_momentum_map(s);
    return std::vector<double>{adm_hamiltonian(s), c.hamiltonian, norm3(c.diffeo),
                               J[0], J[1], J[2]};
  };

  IntegrationOptions opts;
  opts.cadence = cfg.cadence;
  res.rec = integrate(make_adm_rhs([lapse](double) { return lapse; }), adm_state_to_flat(s0),
                      cfg.gr.t0, cfg.horizon, cfg.stepper, &diag, opts);

  if (cfg.gr.scenario == "kasner" && res.rec.times.size() > 1) {
    AdmState sa, sb;
    adm_flat_to_state(res.rec.states.front(), sa);
    adm_flat_to_state(res.rec.states.back(), sb);
    const std::array<double, 3> fitted = fitted_kasner_exponents(
        sa.g, sb.g, res.rec.times.front(), res.rec.times.back());
    res.extra["fitted_exponents"] = fitted;
    res.extra["fitted_exponent_sum"] = fitted[0] + fitted[1] + fitted[2];
    res.extra["fitted_exponent_square_sum"] =
        fitted[0] * fitted[0] + fitted[1] * fitted[1] + fitted[2] * fitted[2];
  }
  return res;
}

// Drift of the energy column and of the backend's leading constraint column,
// measured as max deviation from the first row.
void measure_drifts(const Config& cfg, RunResult& res) {
  const auto& rows = res.rec.diagnostics;
  if (rows.empty()) return;
  std::size_t ccol = 1;  // C_norm | gauss_l2 | ham_constraint
  const double h0 = rows.front()[0];
  const double c0 = (cfg.backend == "gr") ? std::abs(rows.front()[ccol]) : rows.front()[ccol];
  for (const auto& row : rows) {
    res.drift_energy = std::max(res.drift_energy, std::abs(row[0] - h0));
    const double c = (cfg.backend == "gr") ? std::abs(row[ccol]) : row[ccol];
    res.drift_constraint = std::max(res.drift_constraint, c - c0);
  }
}

RunResult run_scenario(const Config& cfg, const fs::path& out_dir) {
  RunResult res;
  if (cfg.backend == "finite" || cfg.backend == "extended")
    res = run_finite(cfg);
  else if (cfg.backend == "ymh")
    res = run_ymh(cfg, out_dir);
  else
    res = run_gr(cfg);
  measure_drifts(cfg, res);
  return res;
}

// ---------------------------------------------------------------------------
// Artifact emission
// ---------------------------------------------------------------------------

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(const fs::path& path, const RunResult& res) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << "t";
  for (const auto& c : res.columns) f << "," << c;
  f << "\n";
  for (std::size_t k = 0; k < res.rec.times.size(); ++k) {
    f << format_g17(res.rec.times[k]);
    for (double xv : res.rec.diagnostics[k]) f << "," << format_g17(xv);
    f << "\n";
  }
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

json final_row_object(const RunResult& res) {
  json out = json::object();
  out["t"] = res.rec.times.back();
  const auto& row = res.rec.diagnostics.back();
  for (std::size_t i = 0; i < res.columns.size(); ++i) out[res.columns[i]] = row[i];
  return out;
}

fs::path resolve_out_dir(const std::string& configured) {
  if (const char* env = std::getenv("CLEBSCH_OUTPUT_DIR"); env && *env) return fs::path(env);
  return fs::path(configured);
}

int cmd_run(const std::string& config_path) {
  const Config cfg = load_config(config_path);
  const fs::path dir = resolve_out_dir(cfg.out_dir);
  fs::create_directories(dir);
  const auto start = std::chrono::steady_clock::now();
  RunResult res = run_scenario(cfg, dir);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_csv(dir / "series.csv", res);
  json summary;
  summary["config"] = cfg.normalized;
  summary["output_dir"] = dir.string();
  summary["wall_time_seconds"] = wall;
  summary["rows"] = res.rec.times.size();
  summary["final"] = final_row_object(res);
  summary["drift"] = {{"energy", res.drift_energy}, {"constraint", res.drift_constraint}};
  for (auto it = res.extra.begin(); it != res.extra.end(); ++it) summary[it.key()] = it.value();
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  std::cout << dir.string() << "\n";
  return 0;
}

int cmd_check(const std::string& config_path) {
  const Config cfg = load_config(config_path);
  std::cout << cfg.normalized.dump(2) << "\n";
  return 0;
}

std::vector<double> parse_dt_list(const std::string& arg) {
  std::vector<double> out;
  std::stringstream ss(arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t pos = 0;
      const double v = std::stod(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError("sweep.dt: '" + tok + "' is not a number");
    }
  }
  return out;
}

int cmd_sweep(const std::string& config_path, const std::string& dt_arg) {
  const Config base = load_config(config_path);
  const std::vector<double> dts = parse_dt_list(dt_arg);
  if (dts.size() < 3) fail("sweep.dt", "need at least 3 values");
  for (double v : dts)
    if (!(v > 0)) fail("sweep.dt", "values must be positive");
  const double r0 = dts[1] / dts[0];
  for (std::size_t i = 1; i + 1 < dts.size(); ++i) {
    const double r = dts[i + 1] / dts[i];
    if (std::abs(r / r0 - 1.0) > 1e-6) fail("sweep.dt", "values must be geometrically spaced");
  }
  if (std::abs(r0 - 1.0) < 1e-12) fail("sweep.dt", "values must be distinct");
  for (double v : dts) {
    const double steps = base.horizon / v;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
      fail("sweep.dt", "horizon is not an integer multiple of " + format_g17(v));
  }

  const fs::path root = resolve_out_dir(base.out_dir);
  fs::create_directories(root);
  const auto start = std::chrono::steady_clock::now();

  struct SubRun {
    double dt;
    fs::path dir;
    std::future<RunResult> fut;
  };
  std::vector<SubRun> subs;
  for (double v : dts) {
    char name[48];
    std::snprintf(name, sizeof name, "dt_%.6g", v);
    Config sub = base;
    sub.stepper.dt = v;
    sub.normalized["integrator"]["dt"] = v;
    const fs::path dir = root / name;
    fs::create_directories(dir);
    subs.push_back({v, dir, std::future<RunResult>{}});
    subs.back().fut = std::async(std::launch::async, [sub, dir]() {
      return run_scenario(sub, dir);
    });
  }

  std::vector<double> drifts;
  json runs = json::array();
  for (auto& sub : subs) {
    RunResult res = sub.fut.get();
    write_csv(sub.dir / "series.csv", res);
    json summary;
    Config cfg = base;
    cfg.normalized["integrator"]["dt"] = sub.dt;
    summary["config"] = cfg.normalized;
    summary["output_dir"] = sub.dir.string();
    summary["rows"] = res.rec.times.size();
    summary["final"] = final_row_object(res);
    summary["drift"] = {{"energy", res.drift_energy}, {"constraint", res.drift_constraint}};
    for (auto it = res.extra.begin(); it != res.extra.end(); ++it) summary[it.key()] = it.value();
    write_text(sub.dir / "summary.json", summary.dump(2) + "\n");
    const double drift =
        base.sweep_metric == "energy" ? res.drift_energy : res.drift_constraint;
    drifts.push_back(drift);
    runs.push_back({{"dt", sub.dt}, {"dir", sub.dir.string()}, {"drift", drift}});
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json report;
  report["config"] = base.normalized;
  report["metric"] = base.sweep_metric;
  report["dt_values"] = dts;
  report["drifts"] = drifts;
  report["runs"] = runs;
  report["wall_time_seconds"] = wall;
  const double min_drift = *std::min_element(drifts.begin(), drifts.end());
  if (min_drift <= 1e-14) {
    report["slope"] = nullptr;
    report["slope_applicable"] = false;
  } else {
    report["slope"] = fit_loglog_slope(dts, drifts);
    report["slope_applicable"] = true;
  }
  write_text(root / "sweep_summary.json", report.dump(2) + "\n");
  std::cout << root.string() << "\n";
  return 0;
}

int cmd_plotscript(const std::string& run_dir) {
  const fs::path dir(run_dir);
  const fs::path csv = dir / "series.csv";
  if (!fs::exists(csv)) {
    std::cerr << "plotscript: " << csv.string() << " not found\n";
    return 2;
  }
  std::ifstream f(csv);
  std::string header;
  std::getline(f, header);
  if (header.empty()) {
    std::cerr << "plotscript: " << csv.string() << " has no header row\n";
    return 2;
  }

  std::ostringstream py;
  py << "#!/usr/bin/env python3\n"
     << "# Plots series.csv from the run directory this script sits in.\n"
     << "import csv\n"
     << "import os\n"
     << "\n"
     << "import matplotlib\n"
     << "matplotlib.use(\"Agg\")\n"
     << "import matplotlib.pyplot as plt\n"
     << "\n"
     << "here = os.path.dirname(os.path.abspath(__file__))\n"
     << "path = os.path.join(here, \"series.csv\")\n"
     << "with open(path, newline=\"\") as fh:\n"
     << "    rows = list(csv.reader(fh))\n"
     << "cols = rows[0]\n"
     << "data = {c: [float(r[i]) for r in rows[1:]] for i, c in enumerate(cols)}\n"
     << "t = data[\"t\"]\n"
     << "hcols = [c for c in cols if c == \"H\"]\n"
     << "ccols = [c for c in cols if c in (\"C_norm\", \"nu_norm\", \"gauss_l2\", "
        "\"gauss_linf\", \"ham_constraint\", \"diffeo_norm\")]\n"
     << "jcols = [c for c in cols if c.startswith(\"J_\")]\n"
     << "fig, axes = plt.subplots(3, 1, figsize=(8, 10), sharex=True)\n"
     << "for c in hcols:\n"
     << "    axes[0].plot(t, data[c], label=c)\n"
     << "axes[0].set_ylabel(\"energy\")\n"
     << "axes[0].legend()\n"
     << "for c in ccols:\n"
     << "    axes[1].semilogy(t, [abs(v) + 1e-300 for v in data[c]], label=c)\n"
     << "axes[1].set_ylabel(\"constraints\")\n"
     << "axes[1].legend()\n"
     << "for c in jcols:\n"
     << "    axes[2].plot(t, data[c], label=c)\n"
     << "axes[2].set_ylabel(\"momentum map\")\n"
     << "axes[2].set_xlabel(\"t\")\n"
     << "axes[2].legend()\n"
     << "fig.tight_layout()\n"
     << "out = os.path.join(here, \"plot.png\")\n"
     << "fig.savefig(out, dpi=150)\n"
     << "print(out)\n";
  write_text(dir / "plot.py", py.str());
  std::cout << (dir / "plot.py").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clebsch mechanics scenario driver"};
  app.require_subcommand(1);

  std::string run_config, check_config, sweep_config, sweep_dts, plot_dir;
  CLI::App* run = app.add_subcommand("run", "integrate one scenario and write its artifacts");
  run->add_option("config", run_config, "JSON scenario config")->required();
  CLI::App* sweep = app.add_subcommand("sweep", "run the scenario per dt and fit a drift slope");
  sweep->add_option("config", sweep_config, "JSON scenario config")->required();
  sweep->add_option("--dt", sweep_dts, "comma-separated dt values (>= 3, geometric)")->required();
  CLI::App* check = app.add_subcommand("check", "validate a config and print its normalized form");
  check->add_option("config", check_config, "JSON scenario config")->required();
  CLI::App* plot = app.add_subcommand("plotscript", "emit a matplotlib script for a run directory");
  plot->add_option("run_dir", plot_dir, "directory containing series.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) return cmd_run(run_config);
    if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_dts);
    if (check->parsed()) return cmd_check(check_config);
    return cmd_plotscript(plot_dir);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NonConvergence& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const SingularMetric& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
