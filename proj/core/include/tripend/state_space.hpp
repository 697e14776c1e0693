#pragma once

#include <Eigen/Core>

#include <complex>
#include <string>
#include <vector>

namespace tripend {

// Continuous-time LTI system xdot = Ax + Bu, y = Cx + Du with optional
// ordered channel labels.  Labels are bookkeeping only: either empty or
// exactly one per channel (check() enforces the sizes).
struct StateSpaceModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::MatrixXd D;
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;

  int states() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(B.cols()); }
  int outputs() const { return static_cast<int>(C.rows()); }

  // Throws DimensionMismatch on inconsistent shapes or label counts.
  void check() const;

  static StateSpaceModel gain(const Eigen::MatrixXd& d);
  // k / (tau s + 1)
  static StateSpaceModel first_order_lag(double k, double tau);
  // k (s/a + 1) / (s/b + 1), a, b > 0
  static StateSpaceModel first_order_ratio(double k, double a, double b);
};

// y = g2(g1(u))
StateSpaceModel series(const StateSpaceModel& g1, const StateSpaceModel& g2);
// y = g1(u) + g2(u)
StateSpaceModel parallel(const StateSpaceModel& g1, const StateSpaceModel& g2);
// diag(g1, g2): inputs and outputs stacked
StateSpaceModel append(const StateSpaceModel& g1, const StateSpaceModel& g2);

// y = g(u + sign*h(y)); sign -1 is negative feedback.  Throws IllPosed when
// the algebraic loop I - sign*Dg*Dh is singular.
StateSpaceModel feedback_loop(const StateSpaceModel& g, const StateSpaceModel& h,
                              double sign = -1.0);

// Row/column selection (and reordering); indices are 0-based.
StateSpaceModel subsystem(const StateSpaceModel& g, const std::vector<int>& out_idx,
                          const std::vector<int>& in_idx);

// Lower LFT: closes the LAST n_meas outputs against the LAST n_ctrl inputs
// through k (u = k(y), positive wiring).  Throws IllPosed on a singular
// I - D22*Dk loop.
StateSpaceModel lft_lower(const StateSpaceModel& p, const StateSpaceModel& k,
                          int n_meas, int n_ctrl);

// Upper LFT: closes the FIRST n_z outputs against the FIRST n_w inputs
// through delta (w = delta(z)).
StateSpaceModel lft_upper(const StateSpaceModel& p, const StateSpaceModel& delta,
                          int n_z, int n_w);

// Upper closure by a constant real block.
StateSpaceModel close_upper(const StateSpaceModel& p, const Eigen::MatrixXd& delta,
                            int n_z, int n_w);

// State matrix of the upper closure by a constant complex block; used for
// stability probes where delta carries phase.
Eigen::MatrixXcd close_upper_state_matrix(const StateSpaceModel& p,
                                          const Eigen::MatrixXcd& delta,
                                          int n_z, int n_w);

// G(j*omega).  Throws SingularResolvent when j*omega sits on an eigenvalue
// of A (within 1e-12 relative).
Eigen::MatrixXcd eval_response(const StateSpaceModel& g, double omega);

struct FrequencyResponse {
  std::vector<double> grid;                 // rad/s, ascending
  std::vector<Eigen::MatrixXcd> values;     // one matrix per grid point
};

FrequencyResponse freq_response(const StateSpaceModel& g, const std::vector<double>& grid);

// n logarithmically spaced points over [w_min, w_max].
std::vector<double> log_grid(double w_min, double w_max, int n);

// The house grid: 400 points over [1e-2, 1e3] rad/s.
std::vector<double> default_grid();

}  // namespace tripend
