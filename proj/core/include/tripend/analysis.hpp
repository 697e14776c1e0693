#pragma once

#include <Eigen/Core>

#include "tripend/state_space.hpp"

namespace tripend {

struct StabilityReport {
  bool hurwitz;
  double spectral_abscissa;  // max Re(lambda); -inf for an empty matrix
};

// Hurwitz means spectral abscissa < -eps_stab (strictly inside the left half
// plane, with a margin against eigensolver noise).
StabilityReport is_hurwitz(const Eigen::MatrixXd& A, double eps_stab = 1e-9);
StabilityReport is_hurwitz(const StateSpaceModel& sys, double eps_stab = 1e-9);

struct NormResult {
  double value;  // +inf when not finite
  bool finite;   // false iff A is not Hurwitz
};

// L-infinity norm of the transfer matrix by Hamiltonian bisection
// (Boyd-Balakrishnan-Kabamba bracket refined to rel_tol).  Pure gains return
// the largest singular value of D.
NormResult hinf_norm(const StateSpaceModel& sys, double rel_tol = 1e-6);

}  // namespace tripend
