#pragma once

#include <Eigen/Core>

#include <vector>

#include "tripend/state_space.hpp"
#include "tripend/uncertainty.hpp"

namespace tripend {

// The structured-singular-value conventions here: M maps the uncertainty
// outputs w back to its inputs z, so M has structure.z_dim() rows and
// structure.w_dim() columns, and robustness of the loop w = Delta z fails
// first at norm 1/mu.  All blocks are treated as complex (real parametric
// blocks included), which can only overestimate mu.

struct MuBound {
  double value = 0.0;
  Eigen::VectorXd scales;  // one positive scale per block, last fixed at 1
};

// Upper bound: min over block-commuting positive scalings of the scaled
// largest singular value, by subgradient descent in log coordinates.
// Stops at max_iters or when an accepted step improves by less than rel_tol
// relative.
MuBound mu_upper(const Eigen::MatrixXcd& M, const BlockStructure& structure,
                 int max_iters = 200, double rel_tol = 1e-4);

// Lower bound: spectral radius of M*Delta maximized over unit-norm
// structured Delta (singular-vector alignment plus a power-type ascent).
// Always a valid lower bound; not guaranteed tight.
double mu_lower(const Eigen::MatrixXcd& M, const BlockStructure& structure);

struct MuResult {
  std::vector<double> grid;
  std::vector<double> upper;
  std::vector<double> lower;
  std::vector<Eigen::VectorXd> scales;  // minimizing scalings per grid point
  double peak_upper = 0.0;
  double peak_omega = 0.0;
  bool robust = false;  // peak_upper < 1
};

// Frequency sweep of both bounds over the closed interconnection
// [w; exo] -> [z; e] with the performance block appended to the structure.
// Throws NotStable when the interconnection is not Hurwitz.
MuResult mu_sweep(const StateSpaceModel& closed, const BlockStructure& structure,
                  const std::vector<double>& grid);

}  // namespace tripend
