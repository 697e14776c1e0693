#pragma once

#include <stdexcept>
#include <string>

namespace tripend {

// Numerical breakdown inside an otherwise well-posed computation.  The CLI
// maps these to exit code 4.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mass matrix condition number above the 1e12 ceiling.
class SingularMass : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

// Hamiltonian eigenvalues on (or hugging) the imaginary axis, or a defective
// stable subspace: no stabilizing Riccati solution exists at this level.
class NoStabilizingSolution : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

// Frequency response requested at (numerically) a pole of the system.
class SingularResolvent : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

// Algebraic loop without a solution: singular I - D*Dk in a feedback or LFT
// closure.
class IllPosed : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

// Matrix operands whose shapes do not line up.  Programming error, not data.
class DimensionMismatch : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// No admissible gamma at or below the search ceiling.
class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Synthesis assumptions fail: unstabilizable/undetectable plant, or rank
// defects that the epsilon regularization could not repair.
class RegularityFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No weight in the searched family overbounds the sampled errors within the
// conservatism cap.
class FitFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rational scaling fit exceeds the 6 dB error cap at some grid point.
class DFitFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation that requires a stable system was handed an unstable one.
class NotStable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad key, bad value, or unparseable line in a run configuration.  The CLI
// maps this (and physical-parameter validation) to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tripend
