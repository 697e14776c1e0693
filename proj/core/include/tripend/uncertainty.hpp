#pragma once

#include <string>
#include <vector>

#include "tripend/dynamics.hpp"
#include "tripend/params.hpp"
#include "tripend/state_space.hpp"

namespace tripend {

// One belt-drive channel: nominal response from commanded to delivered
// torque, plus the multiplicative error radius |weight| covering the
// unmodeled lag spread.
struct ActuatorModel {
  StateSpaceModel nominal;  // SISO
  StateSpaceModel weight;   // SISO, stable, radius profile
};

// 1/(0.05 s + 1) with radius 0.2 at dc, exactly 1.0 at 100 rad/s, 2.0
// asymptotically.
ActuatorModel default_actuator();

// First-order radius profile through (dc -> radius_lf, omega_unity -> 1,
// high frequency -> radius_hf).  Requires radius_lf < 1 < radius_hf.
StateSpaceModel actuator_weight_from_profile(double radius_lf, double radius_hf,
                                             double omega_unity);

// Smallest first-order (retry: second-order) overbound of the relative
// errors |(G_k - G)/G| sampled on the grid, floored at 1e-4.  Throws
// FitFailed when every candidate is more than 3 dB conservative at the worst
// sampled point.
StateSpaceModel fit_actuator_weight(const StateSpaceModel& nominal,
                                    const std::vector<StateSpaceModel>& family,
                                    const std::vector<double>& grid);

// Mixed-sensitivity weights.  wp() penalizes tracking error with integral
// character flattening at Ms; wu/wn are constant effort/noise scalings.
struct PerformanceWeights {
  double Ms = 2.0;
  double omega_b = 4.0;
  double eps = 1e-3;
  double wu = 1e-2;
  double wn = 1e-3;

  StateSpaceModel wp_channel() const;  // SISO (s/Ms + omega_b)/(s + omega_b*eps)
};

PerformanceWeights default_performance_weights();

enum class BlockKind { RealScalar, ComplexScalar, ComplexFull };

// Delta_i maps z_i (cols entries) to w_i (rows entries).  The matrix such a
// structure scales therefore has sum(cols) rows and sum(rows) columns.
struct UncertainBlock {
  BlockKind kind = BlockKind::ComplexScalar;
  int rows = 1;
  int cols = 1;
  std::string label;
};

struct BlockStructure {
  std::vector<UncertainBlock> blocks;

  int z_dim() const;
  int w_dim() const;
};

// Weighted open interconnection around the upright linearization.
//
//   inputs : [ w (param + actuator) | r(3) d(3) n(3) | u(2) ]
//   outputs: [ z (param + actuator) | ey(3) eu(2)    | ym(3) ]
//
// Parametric channels realize the linear family exactly: closing w = delta*z
// with |delta_i| <= 1 reproduces the linearization at the corresponding
// parameter draw (inertia blocks feed through the accelerations, so the mass
// matrix correction appears as the LFT's algebraic loop).  Actuator blocks
// are the multiplicative lag covers.  ym = r - y - wn*n is what a controller
// gets to see.
struct AugmentedPlant {
  StateSpaceModel sys;
  BlockStructure structure;  // the scalar blocks; the performance block is appended by mu
  int n_exo = 9;
  int n_perf = 5;
  int n_meas = 3;
  int n_ctrl = 2;

  int n_w() const { return structure.w_dim(); }
  int n_z() const { return structure.z_dim(); }
};

AugmentedPlant build_uncertain_plant(const PhysicalParameters& p,
                                     const UncertaintySpec& spec,
                                     const ActuatorModel& act1,
                                     const ActuatorModel& act2,
                                     const PerformanceWeights& pw);

}  // namespace tripend
