#include "tripend/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "tripend/errors.hpp"
#include "tripend/io.hpp"

namespace tripend {

namespace {

struct DoubleKey {
  const char* key;
  std::function<double&(RunConfig&)> ref;
};

struct IntKey {
  const char* key;
  std::function<int&(RunConfig&)> ref;
};

// One table drives apply() and echo(), so the echo order is the canonical
// key order and nothing can be listed without being settable.
const std::vector<DoubleKey>& double_keys() {
  static const std::vector<DoubleKey> keys = {
      {"params.l1", [](RunConfig& c) -> double& { return c.params.l1; }},
      {"params.l2", [](RunConfig& c) -> double& { return c.params.l2; }},
      {"params.h1", [](RunConfig& c) -> double& { return c.params.h1; }},
      {"params.h2", [](RunConfig& c) -> double& { return c.params.h2; }},
      {"params.h3", [](RunConfig& c) -> double& { return c.params.h3; }},
      {"params.m1", [](RunConfig& c) -> double& { return c.params.m1; }},
      {"params.m2", [](RunConfig& c) -> double& { return c.params.m2; }},
      {"params.m3", [](RunConfig& c) -> double& { return c.params.m3; }},
      {"params.I1", [](RunConfig& c) -> double& { return c.params.I1; }},
      {"params.I2", [](RunConfig& c) -> double& { return c.params.I2; }},
      {"params.I3", [](RunConfig& c) -> double& { return c.params.I3; }},
      {"params.C1", [](RunConfig& c) -> double& { return c.params.C1; }},
      {"params.C2", [](RunConfig& c) -> double& { return c.params.C2; }},
      {"params.C3", [](RunConfig& c) -> double& { return c.params.C3; }},
      {"params.Cm1", [](RunConfig& c) -> double& { return c.params.Cm1; }},
      {"params.Cm2", [](RunConfig& c) -> double& { return c.params.Cm2; }},
      {"params.K1", [](RunConfig& c) -> double& { return c.params.K1; }},
      {"params.K2", [](RunConfig& c) -> double& { return c.params.K2; }},
      {"params.Ip1", [](RunConfig& c) -> double& { return c.params.Ip1; }},
      {"params.Ip2", [](RunConfig& c) -> double& { return c.params.Ip2; }},
      {"params.Cp1", [](RunConfig& c) -> double& { return c.params.Cp1; }},
      {"params.Cp2", [](RunConfig& c) -> double& { return c.params.Cp2; }},
      {"params.beta1", [](RunConfig& c) -> double& { return c.params.beta1; }},
      {"params.beta2", [](RunConfig& c) -> double& { return c.params.beta2; }},
      {"params.beta3", [](RunConfig& c) -> double& { return c.params.beta3; }},
      {"params.g", [](RunConfig& c) -> double& { return c.params.g; }},
      {"unc.width.I1", [](RunConfig& c) -> double& { return c.unc.width[0]; }},
      {"unc.width.I2", [](RunConfig& c) -> double& { return c.unc.width[1]; }},
      {"unc.width.I3", [](RunConfig& c) -> double& { return c.unc.width[2]; }},
      {"unc.width.C1", [](RunConfig& c) -> double& { return c.unc.width[3]; }},
      {"unc.width.C2", [](RunConfig& c) -> double& { return c.unc.width[4]; }},
      {"unc.width.C3", [](RunConfig& c) -> double& { return c.unc.width[5]; }},
      {"unc.width.Cm1", [](RunConfig& c) -> double& { return c.unc.width[6]; }},
      {"unc.width.Cm2", [](RunConfig& c) -> double& { return c.unc.width[7]; }},
      {"act.gain", [](RunConfig& c) -> double& { return c.act_gain; }},
      {"act.tau", [](RunConfig& c) -> double& { return c.act_tau; }},
      {"act.radius_lf", [](RunConfig& c) -> double& { return c.act_radius_lf; }},
      {"act.radius_hf", [](RunConfig& c) -> double& { return c.act_radius_hf; }},
      {"act.omega_unity", [](RunConfig& c) -> double& { return c.act_omega_unity; }},
      {"weights.Ms", [](RunConfig& c) -> double& { return c.weights.Ms; }},
      {"weights.omega_b", [](RunConfig& c) -> double& { return c.weights.omega_b; }},
      {"weights.eps", [](RunConfig& c) -> double& { return c.weights.eps; }},
      {"weights.wu", [](RunConfig& c) -> double& { return c.weights.wu; }},
      {"weights.wn", [](RunConfig& c) -> double& { return c.weights.wn; }},
      {"synth.gamma_tol", [](RunConfig& c) -> double& { return c.synth_gamma_tol; }},
      {"grid.omega_min", [](RunConfig& c) -> double& { return c.grid_omega_min; }},
      {"grid.omega_max", [](RunConfig& c) -> double& { return c.grid_omega_max; }},
      {"tracking.r1", [](RunConfig& c) -> double& { return c.tracking.r1; }},
      {"tracking.r2", [](RunConfig& c) -> double& { return c.tracking.r2; }},
      {"tracking.r3", [](RunConfig& c) -> double& { return c.tracking.r3; }},
      {"tracking.d1", [](RunConfig& c) -> double& { return c.tracking.d1; }},
      {"tracking.d2", [](RunConfig& c) -> double& { return c.tracking.d2; }},
      {"tracking.d3", [](RunConfig& c) -> double& { return c.tracking.d3; }},
      {"tracking.t_final", [](RunConfig& c) -> double& { return c.tracking.t_final; }},
      {"tracking.dt", [](RunConfig& c) -> double& { return c.tracking.dt; }},
      {"disturbance.r1", [](RunConfig& c) -> double& { return c.disturbance.r1; }},
      {"disturbance.r2", [](RunConfig& c) -> double& { return c.disturbance.r2; }},
      {"disturbance.r3", [](RunConfig& c) -> double& { return c.disturbance.r3; }},
      {"disturbance.d1", [](RunConfig& c) -> double& { return c.disturbance.d1; }},
      {"disturbance.d2", [](RunConfig& c) -> double& { return c.disturbance.d2; }},
      {"disturbance.d3", [](RunConfig& c) -> double& { return c.disturbance.d3; }},
      {"disturbance.t_final", [](RunConfig& c) -> double& { return c.disturbance.t_final; }},
      {"disturbance.dt", [](RunConfig& c) -> double& { return c.disturbance.dt; }},
  };
  return keys;
}

const std::vector<IntKey>& int_keys() {
  static const std::vector<IntKey> keys = {
      {"synth.max_iters", [](RunConfig& c) -> int& { return c.synth_max_iters; }},
      {"synth.d_order", [](RunConfig& c) -> int& { return c.synth_d_order; }},
      {"grid.n", [](RunConfig& c) -> int& { return c.grid_n; }},
      {"vertex_budget", [](RunConfig& c) -> int& { return c.vertex_budget; }},
  };
  return keys;
}

double parse_double(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0' || errno == ERANGE)
    throw ConfigError("bad numeric value for '" + key + "': " + value);
  return v;
}

long long parse_int(const std::string& key, const std::string& value) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0' || errno == ERANGE)
    throw ConfigError("bad integer value for '" + key + "': " + value);
  return v;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value) {
  for (const auto& k : double_keys()) {
    if (key == k.key) {
      k.ref(*this) = parse_double(key, value);
      return;
    }
  }
  for (const auto& k : int_keys()) {
    if (key == k.key) {
      k.ref(*this) = static_cast<int>(parse_int(key, value));
      return;
    }
  }
  if (key == "seed") {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0' || errno == ERANGE)
      throw ConfigError("bad integer value for 'seed': " + value);
    seed = v;
    return;
  }
  if (key == "sim.nonlinear") {
    if (value == "true" || value == "1")
      sim_nonlinear = true;
    else if (value == "false" || value == "0")
      sim_nonlinear = false;
    else
      throw ConfigError("bad boolean value for 'sim.nonlinear': " + value);
    return;
  }
  if (key == "out.dir") {
    if (value.empty()) throw ConfigError("out.dir must not be empty");
    out_dir = value;
    return;
  }
  throw ConfigError("unknown key '" + key + "'");
}

RunConfig RunConfig::load(const std::string& path,
                          const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
      try {
        cfg.apply(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
      } catch (const ConfigError& e) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + ov + "' is not key=value");
    cfg.apply(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  params.validate();
  unc.validate();
  if (!(act_gain > 0.0)) throw ConfigError("act.gain must be positive");
  if (!(act_tau > 0.0)) throw ConfigError("act.tau must be positive");
  if (!(act_radius_lf > 0.0 && act_radius_lf < 1.0))
    throw ConfigError("act.radius_lf must lie in (0, 1)");
  if (!(act_radius_hf > 1.0)) throw ConfigError("act.radius_hf must exceed 1");
  if (!(act_omega_unity > 0.0)) throw ConfigError("act.omega_unity must be positive");
  if (!(weights.Ms > 1.0)) throw ConfigError("weights.Ms must exceed 1");
  if (!(weights.omega_b > 0.0)) throw ConfigError("weights.omega_b must be positive");
  if (!(weights.eps > 0.0 && weights.eps < 1.0))
    throw ConfigError("weights.eps must lie in (0, 1)");
  if (!(weights.wu > 0.0)) throw ConfigError("weights.wu must be positive");
  if (!(weights.wn >= 0.0)) throw ConfigError("weights.wn must be non-negative");
  if (!(synth_gamma_tol > 0.0)) throw ConfigError("synth.gamma_tol must be positive");
  if (synth_max_iters < 1) throw ConfigError("synth.max_iters must be >= 1");
  if (synth_d_order < 0 || synth_d_order > 2)
    throw ConfigError("synth.d_order must be 0, 1 or 2");
  if (grid_n < 2) throw ConfigError("grid.n must be >= 2");
  if (!(grid_omega_min > 0.0) || !(grid_omega_max > grid_omega_min))
    throw ConfigError("grid range must satisfy 0 < omega_min < omega_max");
  for (const auto* sc : {&tracking, &disturbance}) {
    if (!(sc->t_final > 0.0) || !(sc->dt > 0.0) || sc->dt > sc->t_final)
      throw ConfigError("scenario times must satisfy 0 < dt <= t_final");
  }
  if (vertex_budget < 1) throw ConfigError("vertex_budget must be >= 1");
  if (out_dir.empty()) throw ConfigError("out.dir must not be empty");
}

std::string RunConfig::echo() const {
  std::ostringstream os;
  RunConfig& self = const_cast<RunConfig&>(*this);
  for (const auto& k : double_keys())
    os << k.key << " = " << io::format_double(k.ref(self)) << "\n";
  for (const auto& k : int_keys()) os << k.key << " = " << k.ref(self) << "\n";
  os << "seed = " << seed << "\n";
  os << "sim.nonlinear = " << (sim_nonlinear ? "true" : "false") << "\n";
  return os.str();
}

std::vector<double> RunConfig::grid() const {
  return log_grid(grid_omega_min, grid_omega_max, grid_n);
}

Scenario RunConfig::scenario(const std::string& name) const {
  const ScenarioConfig* sc = nullptr;
  if (name == "tracking")
    sc = &tracking;
  else if (name == "disturbance")
    sc = &disturbance;
  else
    throw ConfigError("unknown scenario '" + name + "'");
  Scenario out;
  out.name = name;
  out.r << sc->r1, sc->r2, sc->r3;
  out.d << sc->d1, sc->d2, sc->d3;
  out.t_final = sc->t_final;
  out.dt = sc->dt;
  return out;
}

ActuatorModel RunConfig::actuator() const {
  ActuatorModel act;
  act.nominal = StateSpaceModel::first_order_lag(act_gain, act_tau);
  act.weight =
      actuator_weight_from_profile(act_radius_lf, act_radius_hf, act_omega_unity);
  return act;
}

}  // namespace tripend
