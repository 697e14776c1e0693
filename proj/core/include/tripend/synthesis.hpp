#pragma once

#include <string>
#include <vector>

#include "tripend/state_space.hpp"
#include "tripend/uncertainty.hpp"

namespace tripend {

// Open-loop synthesis plant, inputs [w | u], outputs [z | y].
struct PartitionedPlant {
  StateSpaceModel sys;
  int n_w = 0;
  int n_u = 0;
  int n_z = 0;
  int n_y = 0;
};

struct Controller {
  StateSpaceModel sys;
  double gamma = 0.0;
  std::string method;  // "hinf" or "dk"
};

// feasible is the certified achievable level; infeasible the last level the
// Riccati test rejected (NaN when the search floor itself was feasible).
struct GammaBracket {
  double feasible = 0.0;
  double infeasible = 0.0;
};

struct SynthesisInfo {
  GammaBracket bracket{};
  double closed_loop_abscissa = 0.0;
  bool regularized = false;  // rank repairs were applied to D12/D21
};

struct SynthesisOptions {
  double gamma_tol = 1e-3;   // relative bracket width at exit
  double gamma_floor = 1e-4; // ladder start
  double gamma_cap = 1e6;    // Infeasible beyond this
};

struct HinfDesign {
  Controller controller;
  SynthesisInfo info;
};

// Output-feedback Riccati feasibility test at a fixed level.  General
// feedthrough handled per Zhou/Doyle/Glover ch. 16-17; D12/D21 rank defects
// are repaired with epsilon-weighted extra channels first.
bool hinf_gamma_feasible(const PartitionedPlant& pp, double gamma);

// Central controller at the bisected level.  Throws RegularityFailure when
// (A,B2) is not stabilizable or (A,C2) not detectable, Infeasible when no
// level at or below gamma_cap passes.
HinfDesign hinf_synthesize(const PartitionedPlant& pp, const SynthesisOptions& opts = {});

struct DkOptions {
  int max_iters = 4;
  int d_order = 2;  // highest rational order the scaling fit may use
  SynthesisOptions synth{};
  std::vector<double> grid = default_grid();
};

struct DkInfo {
  std::vector<double> gamma_sequence;  // per completed iteration
  std::vector<double> mu_peaks;
  std::vector<int> d_orders;           // scaling order entering each iteration (0 = identity)
  int selected = 0;                    // index into the vectors above
  std::string stopped;                 // early-stop note, empty when all iterations ran
};

struct DkDesign {
  Controller controller;
  SynthesisInfo info;  // of the selected iteration
  DkInfo dk;
};

// Scalings-controller alternation.  Iteration 1 is the plain nominal design
// (identity scalings, uncertainty channels ignored); each later iteration
// fits rational scalings to the previous robustness sweep and re-synthesizes
// on the scaled plant.  Returns the iterate with the smallest mu peak.
// Fit or synthesis trouble after the first completed iteration stops the
// alternation and is recorded rather than thrown.
DkDesign dk_iterate(const AugmentedPlant& aug, const DkOptions& opts = {});

// The nominal channels of the augmented plant as a synthesis partition:
// inputs [r d n | u], outputs [ey eu | ym].
PartitionedPlant nominal_partition(const AugmentedPlant& aug);

}  // namespace tripend
