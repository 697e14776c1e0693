#pragma once

#include <Eigen/Core>

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "tripend/dynamics.hpp"
#include "tripend/synthesis.hpp"
#include "tripend/uncertainty.hpp"

namespace tripend {

// Step-input run: r and d switch on at t = 0 and hold.  References are arm
// angles in rad; the loop converts them through the potentiometer gains.
struct Scenario {
  std::string name;
  Eigen::Vector3d r = Eigen::Vector3d::Zero();
  Eigen::Vector3d d = Eigen::Vector3d::Zero();
  double t_final = 10.0;
  double dt = 1e-3;
};

Scenario tracking_scenario();     // r = [0, -0.1, 0.2] rad
Scenario disturbance_scenario();  // d = [0.1, 0.1, 0.1] N m

struct Rk4Result {
  std::vector<double> t;
  Eigen::MatrixXd x;      // states x samples
  bool nonfinite = false; // trajectory truncated at the first bad sample
};

// Fixed-step classic Runge-Kutta; N = round(t_final/dt) steps.
Rk4Result integrate_rk4(const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
                        const Eigen::VectorXd& x0, double t_final, double dt);

struct SimulationResult {
  Scenario scenario;       // echo, so metrics are recomputable from the result
  std::vector<double> t;
  Eigen::MatrixXd theta;   // 3 x N, rad
  Eigen::MatrixXd volts;   // 3 x N, measured outputs
  Eigen::MatrixXd torque;  // 2 x N, commanded motor torques
  bool nonfinite = false;
};

// Closed loop of the upright linearization with the controller on the
// voltage error.  The loop runs through the nominal motor model (one copy
// per torque channel), the same path the synthesis plant uses.  Constant
// inputs allow exact discretization, which stays meaningful even when the
// controller carries modes far faster than dt.
SimulationResult simulate_linear_cl(const LinearPlant& plant, const Controller& k,
                                    const Scenario& sc,
                                    const StateSpaceModel& act = default_actuator().nominal);

// Full nonlinear rig under the same loop, classic RK4.  Substeps are added
// (deterministically, from the closed loop's spectral radius) when the
// controller is too fast for the output grid.  SingularMass propagates.
SimulationResult simulate_nonlinear_cl(const PhysicalParameters& p,
                                       const CompositeParameters& c,
                                       const Controller& k, const Scenario& sc,
                                       const StateSpaceModel& act = default_actuator().nominal);

struct ChannelMetrics {
  double overshoot = 0.0;      // fraction of the step for stepped channels,
                               // absolute peak for zero-reference channels
  double settling_time = 0.0;  // last exit from the 2% band, s
  double sse = 0.0;            // |mean of final 10% - reference|
};

struct Metrics {
  std::array<ChannelMetrics, 3> ch{};
  bool nonfinite = false;
};

Metrics compute_metrics(const SimulationResult& result);

}  // namespace tripend
