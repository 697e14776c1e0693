#include "tripend/state_space.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

#include "tripend/errors.hpp"

namespace tripend {

namespace {

constexpr double kSingularRel = 1e-12;

// Relative invertibility guard for the small algebraic-loop matrices.
bool invertible(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return true;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  return smin > smax * kSingularRel && smax > 0.0;
}

Eigen::MatrixXd blkdiag(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

std::vector<std::string> pick(const std::vector<std::string>& names,
                              const std::vector<int>& idx) {
  if (names.empty()) return {};
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(names[static_cast<size_t>(i)]);
  return out;
}

std::vector<std::string> head(const std::vector<std::string>& names, int n) {
  if (names.empty()) return {};
  return {names.begin(), names.begin() + n};
}

}  // namespace

void StateSpaceModel::check() const {
  const auto n = A.rows();
  if (A.cols() != n) throw DimensionMismatch("A not square");
  if (B.rows() != n) throw DimensionMismatch("B row count != state count");
  if (C.cols() != n) throw DimensionMismatch("C column count != state count");
  if (D.rows() != C.rows()) throw DimensionMismatch("D row count != output count");
  if (D.cols() != B.cols()) throw DimensionMismatch("D column count != input count");
  if (!input_names.empty() && static_cast<Eigen::Index>(input_names.size()) != B.cols())
    throw DimensionMismatch("input label count != input count");
  if (!output_names.empty() && static_cast<Eigen::Index>(output_names.size()) != C.rows())
    throw DimensionMismatch("output label count != output count");
}

StateSpaceModel StateSpaceModel::gain(const Eigen::MatrixXd& d) {
  StateSpaceModel s;
  s.A.resize(0, 0);
  s.B.resize(0, d.cols());
  s.C.resize(d.rows(), 0);
  s.D = d;
  return s;
}

StateSpaceModel StateSpaceModel::first_order_lag(double k, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("first_order_lag: tau must be positive");
  StateSpaceModel s;
  s.A.resize(1, 1);
  s.B.resize(1, 1);
  s.C.resize(1, 1);
  s.D.resize(1, 1);
  s.A(0, 0) = -1.0 / tau;
  s.B(0, 0) = 1.0 / tau;
  s.C(0, 0) = k;
  s.D(0, 0) = 0.0;
  return s;
}

StateSpaceModel StateSpaceModel::first_order_ratio(double k, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::invalid_argument("first_order_ratio: corners must be positive");
  // k (s/a+1)/(s/b+1) = k*b/a * [1 + (a-b)/(s+b)]
  StateSpaceModel s;
  s.A.resize(1, 1);
  s.B.resize(1, 1);
  s.C.resize(1, 1);
  s.D.resize(1, 1);
  s.A(0, 0) = -b;
  s.B(0, 0) = 1.0;
  s.C(0, 0) = k * (b / a) * (a - b);
  s.D(0, 0) = k * b / a;
  return s;
}

StateSpaceModel series(const StateSpaceModel& g1, const StateSpaceModel& g2) {
  g1.check();
  g2.check();
  if (g2.inputs() != g1.outputs())
    throw DimensionMismatch("series: inner channel counts differ");
  StateSpaceModel s;
  s.A = blkdiag(g1.A, g2.A);
  s.A.bottomLeftCorner(g2.states(), g1.states()) = g2.B * g1.C;
  s.B.resize(g1.states() + g2.states(), g1.inputs());
  s.B.topRows(g1.states()) = g1.B;
  s.B.bottomRows(g2.states()) = g2.B * g1.D;
  s.C.resize(g2.outputs(), s.A.rows());
  s.C.leftCols(g1.states()) = g2.D * g1.C;
  s.C.rightCols(g2.states()) = g2.C;
  s.D = g2.D * g1.D;
  s.input_names = g1.input_names;
  s.output_names = g2.output_names;
  return s;
}

StateSpaceModel parallel(const StateSpaceModel& g1, const StateSpaceModel& g2) {
  g1.check();
  g2.check();
  if (g1.inputs() != g2.inputs() || g1.outputs() != g2.outputs())
    throw DimensionMismatch("parallel: channel counts differ");
  StateSpaceModel s;
  s.A = blkdiag(g1.A, g2.A);
  s.B.resize(s.A.rows(), g1.inputs());
  s.B.topRows(g1.states()) = g1.B;
  s.B.bottomRows(g2.states()) = g2.B;
  s.C.resize(g1.outputs(), s.A.rows());
  s.C.leftCols(g1.states()) = g1.C;
  s.C.rightCols(g2.states()) = g2.C;
  s.D = g1.D + g2.D;
  s.input_names = g1.input_names;
  s.output_names = g1.output_names;
  return s;
}

StateSpaceModel append(const StateSpaceModel& g1, const StateSpaceModel& g2) {
  g1.check();
  g2.check();
  StateSpaceModel s;
  s.A = blkdiag(g1.A, g2.A);
  s.B = blkdiag(g1.B, g2.B);
  s.C = blkdiag(g1.C, g2.C);
  s.D = blkdiag(g1.D, g2.D);
  if (!g1.input_names.empty() || !g2.input_names.empty()) {
    auto in1 = g1.input_names.empty() ? std::vector<std::string>(g1.inputs(), "") : g1.input_names;
    auto in2 = g2.input_names.empty() ? std::vector<std::string>(g2.inputs(), "") : g2.input_names;
    in1.insert(in1.end(), in2.begin(), in2.end());
    s.input_names = std::move(in1);
  }
  if (!g1.output_names.empty() || !g2.output_names.empty()) {
    auto o1 = g1.output_names.empty() ? std::vector<std::string>(g1.outputs(), "") : g1.output_names;
    auto o2 = g2.output_names.empty() ? std::vector<std::string>(g2.outputs(), "") : g2.output_names;
    o1.insert(o1.end(), o2.begin(), o2.end());
    s.output_names = std::move(o1);
  }
  return s;
}

StateSpaceModel feedback_loop(const StateSpaceModel& g, const StateSpaceModel& h, double sign) {
  g.check();
  h.check();
  if (h.inputs() != g.outputs() || h.outputs() != g.inputs())
    throw DimensionMismatch("feedback_loop: channel counts do not close");

  const Eigen::MatrixXd M =
      Eigen::MatrixXd::Identity(g.outputs(), g.outputs()) - sign * g.D * h.D;
  if (!invertible(M)) throw IllPosed("feedback_loop: singular algebraic loop");
  const Eigen::MatrixXd W = M.fullPivLu().inverse();

  const Eigen::MatrixXd Yxg = W * g.C;
  const Eigen::MatrixXd Yxh = sign * W * g.D * h.C;
  const Eigen::MatrixXd Yu = W * g.D;

  const int ng = g.states(), nh = h.states();
  StateSpaceModel s;
  s.A.resize(ng + nh, ng + nh);
  s.A.topLeftCorner(ng, ng) = g.A + sign * g.B * h.D * Yxg;
  s.A.topRightCorner(ng, nh) = sign * g.B * h.C + sign * g.B * h.D * Yxh;
  s.A.bottomLeftCorner(nh, ng) = h.B * Yxg;
  s.A.bottomRightCorner(nh, nh) = h.A + h.B * Yxh;
  s.B.resize(ng + nh, g.inputs());
  s.B.topRows(ng) = g.B + sign * g.B * h.D * Yu;
  s.B.bottomRows(nh) = h.B * Yu;
  s.C.resize(g.outputs(), ng + nh);
  s.C.leftCols(ng) = Yxg;
  s.C.rightCols(nh) = Yxh;
  s.D = Yu;
  s.input_names = g.input_names;
  s.output_names = g.output_names;
  return s;
}

StateSpaceModel subsystem(const StateSpaceModel& g, const std::vector<int>& out_idx,
                          const std::vector<int>& in_idx) {
  g.check();
  for (int i : out_idx)
    if (i < 0 || i >= g.outputs()) throw DimensionMismatch("subsystem: output index");
  for (int i : in_idx)
    if (i < 0 || i >= g.inputs()) throw DimensionMismatch("subsystem: input index");
  StateSpaceModel s;
  s.A = g.A;
  s.B.resize(g.states(), static_cast<Eigen::Index>(in_idx.size()));
  for (size_t j = 0; j < in_idx.size(); ++j) s.B.col(j) = g.B.col(in_idx[j]);
  s.C.resize(static_cast<Eigen::Index>(out_idx.size()), g.states());
  for (size_t i = 0; i < out_idx.size(); ++i) s.C.row(i) = g.C.row(out_idx[i]);
  s.D.resize(s.C.rows(), s.B.cols());
  for (size_t i = 0; i < out_idx.size(); ++i)
    for (size_t j = 0; j < in_idx.size(); ++j) s.D(i, j) = g.D(out_idx[i], in_idx[j]);
  s.input_names = pick(g.input_names, in_idx);
  s.output_names = pick(g.output_names, out_idx);
  return s;
}

StateSpaceModel lft_lower(const StateSpaceModel& p, const StateSpaceModel& k,
                          int n_meas, int n_ctrl) {
  p.check();
  k.check();
  const int m1 = p.inputs() - n_ctrl;
  const int p1 = p.outputs() - n_meas;
  if (m1 < 0 || p1 < 0 || k.inputs() != n_meas || k.outputs() != n_ctrl)
    throw DimensionMismatch("lft_lower: partition does not fit");

  const Eigen::MatrixXd B1 = p.B.leftCols(m1);
  const Eigen::MatrixXd B2 = p.B.rightCols(n_ctrl);
  const Eigen::MatrixXd C1 = p.C.topRows(p1);
  const Eigen::MatrixXd C2 = p.C.bottomRows(n_meas);
  const Eigen::MatrixXd D11 = p.D.topLeftCorner(p1, m1);
  const Eigen::MatrixXd D12 = p.D.topRightCorner(p1, n_ctrl);
  const Eigen::MatrixXd D21 = p.D.bottomLeftCorner(n_meas, m1);
  const Eigen::MatrixXd D22 = p.D.bottomRightCorner(n_meas, n_ctrl);

  const Eigen::MatrixXd S =
      Eigen::MatrixXd::Identity(n_ctrl, n_ctrl) - k.D * D22;
  if (!invertible(S)) throw IllPosed("lft_lower: singular algebraic loop");
  const Eigen::MatrixXd Si = S.fullPivLu().inverse();

  const Eigen::MatrixXd Uxk = Si * k.C;
  const Eigen::MatrixXd Ux = Si * k.D * C2;
  const Eigen::MatrixXd Uw = Si * k.D * D21;

  const int n = p.states(), nk = k.states();
  StateSpaceModel s;
  s.A.resize(n + nk, n + nk);
  s.A.topLeftCorner(n, n) = p.A + B2 * Ux;
  s.A.topRightCorner(n, nk) = B2 * Uxk;
  s.A.bottomLeftCorner(nk, n) = k.B * (C2 + D22 * Ux);
  s.A.bottomRightCorner(nk, nk) = k.A + k.B * D22 * Uxk;
  s.B.resize(n + nk, m1);
  s.B.topRows(n) = B1 + B2 * Uw;
  s.B.bottomRows(nk) = k.B * (D21 + D22 * Uw);
  s.C.resize(p1, n + nk);
  s.C.leftCols(n) = C1 + D12 * Ux;
  s.C.rightCols(nk) = D12 * Uxk;
  s.D = D11 + D12 * Uw;
  s.input_names = head(p.input_names, m1);
  s.output_names = head(p.output_names, p1);
  return s;
}

StateSpaceModel lft_upper(const StateSpaceModel& p, const StateSpaceModel& delta,
                          int n_z, int n_w) {
  p.check();
  if (n_z < 0 || n_w < 0 || n_z > p.outputs() || n_w > p.inputs())
    throw DimensionMismatch("lft_upper: partition does not fit");
  // Rotate the closed channels to the tail and reuse the lower closure.
  std::vector<int> out_idx, in_idx;
  for (int i = n_z; i < p.outputs(); ++i) out_idx.push_back(i);
  for (int i = 0; i < n_z; ++i) out_idx.push_back(i);
  for (int i = n_w; i < p.inputs(); ++i) in_idx.push_back(i);
  for (int i = 0; i < n_w; ++i) in_idx.push_back(i);
  return lft_lower(subsystem(p, out_idx, in_idx), delta, n_z, n_w);
}

StateSpaceModel close_upper(const StateSpaceModel& p, const Eigen::MatrixXd& delta,
                            int n_z, int n_w) {
  return lft_upper(p, StateSpaceModel::gain(delta), n_z, n_w);
}

Eigen::MatrixXcd close_upper_state_matrix(const StateSpaceModel& p,
                                          const Eigen::MatrixXcd& delta,
                                          int n_z, int n_w) {
  p.check();
  if (delta.rows() != n_w || delta.cols() != n_z)
    throw DimensionMismatch("close_upper_state_matrix: delta shape");
  const Eigen::MatrixXcd Cz = p.C.topRows(n_z).cast<std::complex<double>>();
  const Eigen::MatrixXcd Bw = p.B.leftCols(n_w).cast<std::complex<double>>();
  const Eigen::MatrixXcd Dzw = p.D.topLeftCorner(n_z, n_w).cast<std::complex<double>>();

  const Eigen::MatrixXcd loop =
      Eigen::MatrixXcd::Identity(n_z, n_z) - Dzw * delta;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(loop);
  if (n_z > 0) {
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smin > smax * kSingularRel) || !(smax > 0.0))
      throw IllPosed("close_upper_state_matrix: singular algebraic loop");
  }
  const Eigen::MatrixXcd Zi = loop.fullPivLu().solve(Cz);
  return p.A.cast<std::complex<double>>() + Bw * delta * Zi;
}

namespace {

void guard_resolvent(const Eigen::VectorXcd& eigs, double omega) {
  const std::complex<double> s(0.0, omega);
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const double dist = std::abs(s - eigs(i));
    if (dist < 1e-12 * std::max(1.0, std::abs(eigs(i))))
      throw SingularResolvent("frequency response evaluated at a system pole");
  }
}

Eigen::MatrixXcd resolvent_value(const StateSpaceModel& g, double omega) {
  const Eigen::Index n = g.A.rows();
  const std::complex<double> s(0.0, omega);
  Eigen::MatrixXcd res =
      (s * Eigen::MatrixXcd::Identity(n, n) - g.A.cast<std::complex<double>>())
          .partialPivLu()
          .solve(g.B.cast<std::complex<double>>());
  return g.C.cast<std::complex<double>>() * res + g.D.cast<std::complex<double>>();
}

}  // namespace

Eigen::MatrixXcd eval_response(const StateSpaceModel& g, double omega) {
  g.check();
  if (g.states() == 0) return g.D.cast<std::complex<double>>();
  Eigen::EigenSolver<Eigen::MatrixXd> es(g.A, false);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("eval_response: eigensolver failed");
  guard_resolvent(es.eigenvalues(), omega);
  return resolvent_value(g, omega);
}

FrequencyResponse freq_response(const StateSpaceModel& g, const std::vector<double>& grid) {
  g.check();
  FrequencyResponse fr;
  fr.grid = grid;
  fr.values.reserve(grid.size());
  if (g.states() == 0) {
    for (size_t i = 0; i < grid.size(); ++i)
      fr.values.push_back(g.D.cast<std::complex<double>>());
    return fr;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(g.A, false);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("freq_response: eigensolver failed");
  for (double w : grid) {
    guard_resolvent(es.eigenvalues(), w);
    fr.values.push_back(resolvent_value(g, w));
  }
  return fr;
}

std::vector<double> log_grid(double w_min, double w_max, int n) {
  if (!(w_min > 0.0) || !(w_max > w_min) || n < 2)
    throw std::invalid_argument("log_grid: need 0 < w_min < w_max and n >= 2");
  std::vector<double> g(static_cast<size_t>(n));
  const double l0 = std::log10(w_min);
  const double l1 = std::log10(w_max);
  for (int i = 0; i < n; ++i)
    g[static_cast<size_t>(i)] = std::pow(10.0, l0 + (l1 - l0) * i / (n - 1));
  return g;
}

std::vector<double> default_grid() { return log_grid(1e-2, 1e3, 400); }

}  // namespace tripend
