#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tripend/params.hpp"
#include "tripend/sim.hpp"
#include "tripend/uncertainty.hpp"

namespace tripend {

struct ScenarioConfig {
  double r1 = 0.0, r2 = 0.0, r3 = 0.0;
  double d1 = 0.0, d2 = 0.0, d3 = 0.0;
  double t_final = 10.0;
  double dt = 1e-3;
};

// Flat key=value run configuration.  Keys are dotted lowercase paths
// (params.m1, unc.width.I1, synth.gamma_tol, ...); '#' lines and blank lines
// are ignored.  Unknown keys and malformed values throw ConfigError with the
// line number.
struct RunConfig {
  PhysicalParameters params{};
  UncertaintySpec unc{};

  double act_gain = 1.0;
  double act_tau = 0.05;
  double act_radius_lf = 0.2;
  double act_radius_hf = 2.0;
  double act_omega_unity = 100.0;

  PerformanceWeights weights{};

  double synth_gamma_tol = 1e-3;
  int synth_max_iters = 4;
  int synth_d_order = 2;

  int grid_n = 400;
  double grid_omega_min = 1e-2;
  double grid_omega_max = 1e3;

  ScenarioConfig tracking{0.0, -0.1, 0.2, 0.0, 0.0, 0.0, 10.0, 1e-3};
  ScenarioConfig disturbance{0.0, 0.0, 0.0, 0.1, 0.1, 0.1, 10.0, 1e-3};

  bool sim_nonlinear = false;
  int vertex_budget = 256;
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  // Empty path = defaults only.  Overrides are "key=value" strings applied
  // after the file, in order.
  static RunConfig load(const std::string& path, const std::vector<std::string>& overrides);

  void apply(const std::string& key, const std::string& value);
  void validate() const;

  // Canonical key = value listing of everything that affects results (the
  // output directory is deliberately not part of it).
  std::string echo() const;

  std::vector<double> grid() const;
  Scenario scenario(const std::string& name) const;  // "tracking" | "disturbance"
  ActuatorModel actuator() const;
};

}  // namespace tripend
