#include "tripend/synthesis.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "tripend/analysis.hpp"
#include "tripend/care.hpp"
#include "tripend/errors.hpp"
#include "tripend/mu.hpp"

namespace tripend {

namespace {

constexpr double kEpsRegularize = 1e-6;

double sigma_max(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

bool invertible_rel(const Eigen::MatrixXd& m, double rel = 1e-12) {
  if (m.rows() == 0) return true;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  return smax > 0.0 && smin > rel * smax;
}

// Plant in coordinates with D12 = [0; I], D21 = [0 I].  Ru/Ry carry the
// channel scalings back to the original controller coordinates; D22 is the
// original feedthrough, reattached at the very end.
struct Normalized {
  Eigen::MatrixXd A, B1, B2, C1, C2, D11;
  Eigen::MatrixXd Ru;   // upper triangular, u' = Ru u
  Eigen::MatrixXd Ry;   // y' = Ry y
  Eigen::MatrixXd D22;
  bool regularized = false;
  Eigen::Index n = 0, m1 = 0, m2 = 0, p1 = 0, p2 = 0;
};

void pbh_checks(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B2,
                const Eigen::MatrixXd& C2) {
  const Eigen::Index n = A.rows();
  if (n == 0) return;
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("hinf: eigensolver failed on A");
  const double scale = std::max(1.0, A.norm());
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lam = es.eigenvalues()(i);
    if (lam.real() < -1e-9) continue;
    Eigen::MatrixXcd Mb(n, n + B2.cols());
    Mb.leftCols(n) = A.cast<std::complex<double>>() -
                     lam * Eigen::MatrixXcd::Identity(n, n);
    Mb.rightCols(B2.cols()) = B2.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> sb(Mb);
    if (!(sb.singularValues()(n - 1) > 1e-8 * scale))
      throw RegularityFailure("hinf: (A, B2) not stabilizable");
    Eigen::MatrixXcd Mc(n + C2.rows(), n);
    Mc.topRows(n) = Mb.leftCols(n);
    Mc.bottomRows(C2.rows()) = C2.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> sc(Mc);
    if (!(sc.singularValues()(n - 1) > 1e-8 * scale))
      throw RegularityFailure("hinf: (A, C2) not detectable");
  }
}

Normalized normalize(const PartitionedPlant& pp) {
  pp.sys.check();
  if (pp.n_w < 0 || pp.n_z < 0 || pp.n_u < 1 || pp.n_y < 1)
    throw DimensionMismatch("hinf: partition needs at least one control and one measurement");
  if (pp.n_w + pp.n_u != pp.sys.inputs() || pp.n_z + pp.n_y != pp.sys.outputs())
    throw DimensionMismatch("hinf: partition sizes do not add up");

  Normalized np;
  np.n = pp.sys.states();
  np.m2 = pp.n_u;
  np.p2 = pp.n_y;

  np.A = pp.sys.A;
  Eigen::MatrixXd B1 = pp.sys.B.leftCols(pp.n_w);
  np.B2 = pp.sys.B.rightCols(pp.n_u);
  Eigen::MatrixXd C1 = pp.sys.C.topRows(pp.n_z);
  np.C2 = pp.sys.C.bottomRows(pp.n_y);
  Eigen::MatrixXd D11 = pp.sys.D.topLeftCorner(pp.n_z, pp.n_w);
  Eigen::MatrixXd D12 = pp.sys.D.topRightCorner(pp.n_z, pp.n_u);
  Eigen::MatrixXd D21 = pp.sys.D.bottomLeftCorner(pp.n_y, pp.n_w);
  np.D22 = pp.sys.D.bottomRightCorner(pp.n_y, pp.n_u);

  pbh_checks(np.A, np.B2, np.C2);

  // Rank repairs: cheap extra channels make D12 tall/full-column and D21
  // wide/full-row without moving the achievable level noticeably.
  auto col_rank_ok = [](const Eigen::MatrixXd& m) {
    if (m.rows() < m.cols()) return false;
    if (m.cols() == 0) return true;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(m.cols() - 1) >
           1e-9 * std::max(1.0, svd.singularValues()(0));
  };
  if (!col_rank_ok(D12)) {
    const Eigen::Index add = np.m2;
    C1.conservativeResize(C1.rows() + add, Eigen::NoChange);
    C1.bottomRows(add).setZero();
    D11.conservativeResize(D11.rows() + add, Eigen::NoChange);
    D11.bottomRows(add).setZero();
    D12.conservativeResize(D12.rows() + add, Eigen::NoChange);
    D12.bottomRows(add) = kEpsRegularize * Eigen::MatrixXd::Identity(add, add);
    np.regularized = true;
  }
  if (!col_rank_ok(D21.transpose())) {
    const Eigen::Index add = np.p2;
    B1.conservativeResize(Eigen::NoChange, B1.cols() + add);
    B1.rightCols(add).setZero();
    D11.conservativeResize(Eigen::NoChange, D11.cols() + add);
    D11.rightCols(add).setZero();
    D21.conservativeResize(Eigen::NoChange, D21.cols() + add);
    D21.rightCols(add) = kEpsRegularize * Eigen::MatrixXd::Identity(add, add);
    np.regularized = true;
  }

  np.m1 = B1.cols();
  np.p1 = C1.rows();
  if (np.p1 < np.m2 || np.m1 < np.p2)
    throw RegularityFailure("hinf: not enough error/disturbance channels for the ranks");

  // Unitary output rotation + control scaling: D12 -> [0; I].
  Eigen::HouseholderQR<Eigen::MatrixXd> qr12(D12);
  const Eigen::MatrixXd Qfull = qr12.householderQ();
  np.Ru = qr12.matrixQR().topRows(np.m2).triangularView<Eigen::Upper>();
  if (!invertible_rel(np.Ru))
    throw RegularityFailure("hinf: D12 rank repair failed");
  Eigen::MatrixXd Wz(np.p1, np.p1);
  Wz.topRows(np.p1 - np.m2) = Qfull.rightCols(np.p1 - np.m2).transpose();
  Wz.bottomRows(np.m2) = Qfull.leftCols(np.m2).transpose();
  np.C1 = Wz * C1;
  np.D11 = Wz * D11;
  // B2' = B2 Ru^-1 via a right triangular solve.
  np.B2 = np.Ru.transpose()
              .triangularView<Eigen::Lower>()
              .solve(np.B2.transpose())
              .transpose();

  // Dual side: D21 -> [0 I].
  Eigen::HouseholderQR<Eigen::MatrixXd> qr21(D21.transpose());
  const Eigen::MatrixXd Qt = qr21.householderQ();
  const Eigen::MatrixXd Rt =
      qr21.matrixQR().topRows(np.p2).triangularView<Eigen::Upper>();
  if (!invertible_rel(Rt))
    throw RegularityFailure("hinf: D21 rank repair failed");
  Eigen::MatrixXd Ww(np.m1, np.m1);
  Ww.topRows(np.m1 - np.p2) = Qt.rightCols(np.m1 - np.p2).transpose();
  Ww.bottomRows(np.p2) = Qt.leftCols(np.p2).transpose();
  np.B1 = B1 * Ww.transpose();
  np.D11 = (np.D11 * Ww.transpose()).eval();
  np.Ry = Rt.transpose()
              .triangularView<Eigen::Lower>()
              .solve(Eigen::MatrixXd::Identity(np.p2, np.p2));
  np.C2 = np.Ry * np.C2;
  return np;
}

struct FeasiblePoint {
  Eigen::MatrixXd X, Y;
};

// D1. = [D11 D12], D.1 = [D11; D21] in normalized coordinates.
Eigen::MatrixXd d1dot(const Normalized& np) {
  Eigen::MatrixXd d(np.p1, np.m1 + np.m2);
  d.leftCols(np.m1) = np.D11;
  d.rightCols(np.m2).setZero();
  d.bottomRightCorner(np.m2, np.m2).setIdentity();
  return d;
}

Eigen::MatrixXd ddot1(const Normalized& np) {
  Eigen::MatrixXd d(np.p1 + np.p2, np.m1);
  d.topRows(np.p1) = np.D11;
  d.bottomRows(np.p2).setZero();
  d.bottomRightCorner(np.p2, np.p2).setIdentity();
  return d;
}

std::optional<FeasiblePoint> feasible_at(const Normalized& np, double gamma) {
  const Eigen::Index n = np.n, m1 = np.m1, m2 = np.m2, p1 = np.p1, p2 = np.p2;
  const double g2 = gamma * gamma;

  // Necessary feedthrough bounds.
  const double b1 = sigma_max(np.D11.topRows(p1 - m2));
  const double b2 = sigma_max(np.D11.leftCols(m1 - p2));
  if (gamma <= std::max(b1, b2) * (1.0 + 1e-10)) return std::nullopt;

  const Eigen::MatrixXd D1d = d1dot(np);
  const Eigen::MatrixXd Dd1 = ddot1(np);

  Eigen::MatrixXd R = D1d.transpose() * D1d;
  R.topLeftCorner(m1, m1) -= g2 * Eigen::MatrixXd::Identity(m1, m1);
  Eigen::MatrixXd Rt = Dd1 * Dd1.transpose();
  Rt.topLeftCorner(p1, p1) -= g2 * Eigen::MatrixXd::Identity(p1, p1);
  if (!invertible_rel(R) || !invertible_rel(Rt)) return std::nullopt;

  if (n == 0) return FeasiblePoint{Eigen::MatrixXd(0, 0), Eigen::MatrixXd(0, 0)};

  Eigen::MatrixXd B(n, m1 + m2);
  B.leftCols(m1) = np.B1;
  B.rightCols(m2) = np.B2;
  Eigen::MatrixXd C(p1 + p2, n);
  C.topRows(p1) = np.C1;
  C.bottomRows(p2) = np.C2;

  const Eigen::FullPivLU<Eigen::MatrixXd> luR(R);
  const Eigen::FullPivLU<Eigen::MatrixXd> luRt(Rt);

  // H for X: [[A,0],[-C1'C1,-A']] - [[B],[-C1'D1.]] R^-1 [D1.'C1, B'].
  Eigen::MatrixXd rhs(m1 + m2, 2 * n);
  rhs.leftCols(n) = D1d.transpose() * np.C1;
  rhs.rightCols(n) = B.transpose();
  const Eigen::MatrixXd sol = luR.solve(rhs);
  Eigen::MatrixXd Hx(2 * n, 2 * n);
  Hx.topLeftCorner(n, n) = np.A;
  Hx.topRightCorner(n, n).setZero();
  Hx.bottomLeftCorner(n, n) = -np.C1.transpose() * np.C1;
  Hx.bottomRightCorner(n, n) = -np.A.transpose();
  Eigen::MatrixXd lhs(2 * n, m1 + m2);
  lhs.topRows(n) = B;
  lhs.bottomRows(n) = -np.C1.transpose() * D1d;
  Hx -= lhs * sol;

  auto X = stable_invariant_solution(Hx, 1e-8);
  if (!X) return std::nullopt;
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*X);
    if (es.info() != Eigen::Success) return std::nullopt;
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(n - 1);
    if (lo < -1e-8 * std::max(1.0, hi)) {
      return std::nullopt;
    }
  }

  // Dual side for Y.
  Eigen::MatrixXd rhs2(p1 + p2, 2 * n);
  rhs2.leftCols(n) = Dd1 * np.B1.transpose();
  rhs2.rightCols(n) = C;
  const Eigen::MatrixXd sol2 = luRt.solve(rhs2);
  Eigen::MatrixXd Hy(2 * n, 2 * n);
  Hy.topLeftCorner(n, n) = np.A.transpose();
  Hy.topRightCorner(n, n).setZero();
  Hy.bottomLeftCorner(n, n) = -np.B1 * np.B1.transpose();
  Hy.bottomRightCorner(n, n) = -np.A;
  Eigen::MatrixXd lhs2(2 * n, p1 + p2);
  lhs2.topRows(n) = C.transpose();
  lhs2.bottomRows(n) = -np.B1 * Dd1.transpose();
  Hy -= lhs2 * sol2;

  auto Y = stable_invariant_solution(Hy, 1e-8);
  if (!Y) return std::nullopt;
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*Y);
    if (es.info() != Eigen::Success) return std::nullopt;
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(n - 1);
    if (lo < -1e-8 * std::max(1.0, hi)) {
      return std::nullopt;
    }
  }

  // Coupling: spectral radius of XY below gamma^2.
  Eigen::EigenSolver<Eigen::MatrixXd> es((*X) * (*Y), false);
  if (es.info() != Eigen::Success) return std::nullopt;
  const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  if (!(rho < g2)) return std::nullopt;

  return FeasiblePoint{*X, *Y};
}

StateSpaceModel central_controller(const Normalized& np, double gamma,
                                   const FeasiblePoint& fp) {
  const Eigen::Index n = np.n, m1 = np.m1, m2 = np.m2, p1 = np.p1, p2 = np.p2;
  const Eigen::Index q1 = p1 - m2;  // rows of D1111
  const Eigen::Index q2 = m1 - p2;  // cols of D1111
  const double g2 = gamma * gamma;

  const Eigen::MatrixXd D1111 = np.D11.topLeftCorner(q1, q2);
  const Eigen::MatrixXd D1112 = np.D11.topRightCorner(q1, p2);
  const Eigen::MatrixXd D1121 = np.D11.bottomLeftCorner(m2, q2);
  const Eigen::MatrixXd D1122 = np.D11.bottomRightCorner(m2, p2);

  const Eigen::MatrixXd D1d = d1dot(np);
  const Eigen::MatrixXd Dd1 = ddot1(np);
  Eigen::MatrixXd R = D1d.transpose() * D1d;
  R.topLeftCorner(m1, m1) -= g2 * Eigen::MatrixXd::Identity(m1, m1);
  Eigen::MatrixXd Rt = Dd1 * Dd1.transpose();
  Rt.topLeftCorner(p1, p1) -= g2 * Eigen::MatrixXd::Identity(p1, p1);

  Eigen::MatrixXd B(n, m1 + m2);
  B.leftCols(m1) = np.B1;
  B.rightCols(m2) = np.B2;
  Eigen::MatrixXd C(p1 + p2, n);
  C.topRows(p1) = np.C1;
  C.bottomRows(p2) = np.C2;

  const Eigen::MatrixXd F =
      -Eigen::FullPivLU<Eigen::MatrixXd>(R).solve(D1d.transpose() * np.C1 +
                                                  B.transpose() * fp.X);
  const Eigen::MatrixXd L =
      -(((np.B1 * Dd1.transpose() + fp.Y * C.transpose()) *
         Eigen::FullPivLU<Eigen::MatrixXd>(Rt).inverse()))
           .eval();

  const Eigen::MatrixXd F12 = F.middleRows(q2, p2);
  const Eigen::MatrixXd F2 = F.bottomRows(m2);
  const Eigen::MatrixXd L12 = L.middleCols(q1, m2);
  const Eigen::MatrixXd L2 = L.rightCols(p2);

  // Gamma-shifted feedthrough Grammians.
  Eigen::MatrixXd G1iD1112(q1, p2);
  Eigen::MatrixXd Dh11(m2, p2);
  Eigen::MatrixXd M12 = Eigen::MatrixXd::Identity(m2, m2);
  Eigen::MatrixXd M21 = Eigen::MatrixXd::Identity(p2, p2);
  if (q1 > 0) {
    const Eigen::MatrixXd G1 =
        g2 * Eigen::MatrixXd::Identity(q1, q1) - D1111 * D1111.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(G1);
    if (llt.info() != Eigen::Success)
      throw NumericalFailure("hinf: gamma-shifted Grammian lost definiteness");
    G1iD1112 = llt.solve(D1112);
    Dh11 = -D1121 * D1111.transpose() * G1iD1112 - D1122;
    M21 -= D1112.transpose() * G1iD1112;
  } else {
    Dh11 = -D1122;
  }
  if (q2 > 0) {
    const Eigen::MatrixXd G2 =
        g2 * Eigen::MatrixXd::Identity(q2, q2) - D1111.transpose() * D1111;
    Eigen::LLT<Eigen::MatrixXd> llt(G2);
    if (llt.info() != Eigen::Success)
      throw NumericalFailure("hinf: gamma-shifted Grammian lost definiteness");
    M12 -= D1121 * llt.solve(D1121.transpose());
  }

  Eigen::LLT<Eigen::MatrixXd> llt12(M12);
  Eigen::LLT<Eigen::MatrixXd> llt21(M21);
  if (llt12.info() != Eigen::Success || llt21.info() != Eigen::Success)
    throw NumericalFailure("hinf: controller feedthrough factors lost definiteness");
  const Eigen::MatrixXd Dh12 = llt12.matrixL();
  const Eigen::MatrixXd Dh21 = llt21.matrixU();

  Eigen::MatrixXd Z = Eigen::MatrixXd::Identity(n, n) - (fp.Y * fp.X) / g2;
  const Eigen::PartialPivLU<Eigen::MatrixXd> luZ(Z);

  const Eigen::MatrixXd Bh2 = luZ.solve(np.B2 + L12) * Dh12;
  const Eigen::MatrixXd Ch2 = -Dh21 * (np.C2 + F12);
  const Eigen::MatrixXd Dh12invDh11 =
      Dh12.triangularView<Eigen::Lower>().solve(Dh11);
  const Eigen::MatrixXd Bh1 = -luZ.solve(L2) + Bh2 * Dh12invDh11;
  const Eigen::MatrixXd Dh21invCh2 =
      Dh21.triangularView<Eigen::Upper>().solve(Ch2);
  const Eigen::MatrixXd Ch1 = F2 + Dh11 * Dh21invCh2;
  const Eigen::MatrixXd Ah = np.A + B * F + Bh1 * Dh21invCh2;

  // Back to original coordinates: u = Ru^-1 u', y' = Ry y.
  StateSpaceModel k;
  k.A = Ah;
  k.B = Bh1 * np.Ry;
  k.C = np.Ru.triangularView<Eigen::Upper>().solve(Ch1);
  k.D = np.Ru.triangularView<Eigen::Upper>().solve((Dh11 * np.Ry).eval());

  if (np.D22.norm() > 0.0)
    k = feedback_loop(k, StateSpaceModel::gain(np.D22), -1.0);
  return k;
}

}  // namespace

bool hinf_gamma_feasible(const PartitionedPlant& pp, double gamma) {
  if (!(gamma > 0.0)) return false;
  return feasible_at(normalize(pp), gamma).has_value();
}

HinfDesign hinf_synthesize(const PartitionedPlant& pp, const SynthesisOptions& opts) {
  if (!(opts.gamma_tol > 0.0) || !(opts.gamma_floor > 0.0) ||
      !(opts.gamma_cap > opts.gamma_floor))
    throw ConfigError("hinf: bad synthesis options");

  const Normalized np = normalize(pp);

  // Decade ladder up from the floor, then geometric bisection inside the
  // first feasible bracket.
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = opts.gamma_floor;
  std::optional<FeasiblePoint> at_hi;
  for (;;) {
    at_hi = feasible_at(np, hi);
    if (at_hi) break;
    lo = hi;
    hi *= 10.0;
    if (hi > opts.gamma_cap * 1.0000001)
      throw Infeasible("hinf: no admissible level at or below the cap");
  }

  if (std::isfinite(lo)) {
    while (hi - lo > opts.gamma_tol * hi) {
      const double mid = std::sqrt(lo * hi);
      if (auto f = feasible_at(np, mid)) {
        hi = mid;
        at_hi = std::move(f);
      } else {
        lo = mid;
      }
    }
  }

  HinfDesign out;
  out.controller.sys = central_controller(np, hi, *at_hi);
  out.controller.gamma = hi;
  out.controller.method = "hinf";
  out.info.bracket = {hi, lo};
  out.info.regularized = np.regularized;

  if (!pp.sys.output_names.empty()) {
    out.controller.sys.input_names.assign(pp.sys.output_names.end() - pp.n_y,
                                          pp.sys.output_names.end());
  }
  if (!pp.sys.input_names.empty()) {
    out.controller.sys.output_names.assign(pp.sys.input_names.end() - pp.n_u,
                                           pp.sys.input_names.end());
  }

  const StateSpaceModel closed = lft_lower(pp.sys, out.controller.sys, pp.n_y, pp.n_u);
  const StabilityReport rep = is_hurwitz(closed);
  out.info.closed_loop_abscissa = rep.spectral_abscissa;
  if (!rep.hurwitz)
    throw NumericalFailure("hinf: synthesized loop failed the stability check");
  return out;
}

PartitionedPlant nominal_partition(const AugmentedPlant& aug) {
  std::vector<int> outs, ins;
  for (int i = aug.n_z(); i < aug.sys.outputs(); ++i) outs.push_back(i);
  for (int i = aug.n_w(); i < aug.sys.inputs(); ++i) ins.push_back(i);
  PartitionedPlant pp;
  pp.sys = subsystem(aug.sys, outs, ins);
  pp.n_w = aug.n_exo;
  pp.n_u = aug.n_ctrl;
  pp.n_z = aug.n_perf;
  pp.n_y = aug.n_meas;
  return pp;
}

namespace {

// One rational scaling d(s) >= 0 with its exact inverse; first-order
// sections keep both sides stable and minimum phase.
struct FittedScale {
  StateSpaceModel fwd;
  StateSpaceModel inv;
  int order = 0;
};

double fit_err_db(const std::vector<double>& data, const std::vector<double>& fit) {
  double e = 0.0;
  for (size_t j = 0; j < data.size(); ++j)
    e = std::max(e, std::abs(20.0 * std::log10(fit[j] / data[j])));
  return e;
}

FittedScale fit_scale(const std::vector<double>& w, std::vector<double> d,
                      int max_order) {
  const double kCapDb = 6.0;
  const size_t ng = w.size();
  for (double& v : d) v = std::clamp(v, 1e-4, 1e4);

  // Order 0: geometric mean.
  double logm = 0.0;
  for (double v : d) logm += std::log(v);
  const double k0 = std::exp(logm / static_cast<double>(ng));
  {
    std::vector<double> fit(ng, k0);
    if (fit_err_db(d, fit) <= kCapDb || max_order == 0) {
      if (fit_err_db(d, fit) > kCapDb)
        throw DFitFailed("scaling fit exceeds 6 dB with the allowed order");
      FittedScale f;
      f.fwd = StateSpaceModel::gain(Eigen::MatrixXd::Constant(1, 1, k0));
      f.inv = StateSpaceModel::gain(Eigen::MatrixXd::Constant(1, 1, 1.0 / k0));
      f.order = 0;
      return f;
    }
  }

  const std::vector<double> corners = log_grid(w.front(), w.back(), 21);
  auto shape = [](double omega, double a, double b) {
    return std::sqrt((1.0 + (omega / a) * (omega / a)) /
                     (1.0 + (omega / b) * (omega / b)));
  };
  struct Section {
    double k = 1.0, a = 1.0, b = 1.0;
    double err = std::numeric_limits<double>::infinity();
  };
  auto best_section = [&](const std::vector<double>& target) {
    Section best;
    for (double a : corners) {
      for (double b : corners) {
        double lk = 0.0;
        for (size_t j = 0; j < ng; ++j)
          lk += std::log(target[j]) - std::log(shape(w[j], a, b));
        const double k = std::exp(lk / static_cast<double>(ng));
        double err = 0.0;
        for (size_t j = 0; j < ng; ++j)
          err = std::max(err, std::abs(20.0 * std::log10(k * shape(w[j], a, b) /
                                                         target[j])));
        if (err < best.err) best = {k, a, b, err};
      }
    }
    return best;
  };

  const Section s1 = best_section(d);
  if (s1.err <= kCapDb) {
    FittedScale f;
    f.fwd = StateSpaceModel::first_order_ratio(s1.k, s1.a, s1.b);
    f.inv = StateSpaceModel::first_order_ratio(1.0 / s1.k, s1.b, s1.a);
    f.order = 1;
    return f;
  }
  if (max_order < 2)
    throw DFitFailed("scaling fit exceeds 6 dB with the allowed order");

  std::vector<double> resid(ng);
  for (size_t j = 0; j < ng; ++j)
    resid[j] = d[j] / (s1.k * shape(w[j], s1.a, s1.b));
  const Section s2 = best_section(resid);
  std::vector<double> fit(ng);
  for (size_t j = 0; j < ng; ++j)
    fit[j] = s1.k * shape(w[j], s1.a, s1.b) * s2.k * shape(w[j], s2.a, s2.b);
  if (fit_err_db(d, fit) > kCapDb)
    throw DFitFailed("scaling fit exceeds 6 dB with the allowed order");
  FittedScale f;
  f.fwd = series(StateSpaceModel::first_order_ratio(s1.k, s1.a, s1.b),
                 StateSpaceModel::first_order_ratio(s2.k, s2.a, s2.b));
  f.inv = series(StateSpaceModel::first_order_ratio(1.0 / s1.k, s1.b, s1.a),
                 StateSpaceModel::first_order_ratio(1.0 / s2.k, s2.b, s2.a));
  f.order = 2;
  return f;
}

}  // namespace

DkDesign dk_iterate(const AugmentedPlant& aug, const DkOptions& opts) {
  if (opts.max_iters < 1) throw ConfigError("dk: max_iters must be >= 1");
  if (opts.d_order < 0 || opts.d_order > 2)
    throw ConfigError("dk: d_order must be 0, 1 or 2");
  if (opts.grid.empty()) throw ConfigError("dk: empty frequency grid");

  BlockStructure mu_struct = aug.structure;
  mu_struct.blocks.push_back(
      {BlockKind::ComplexFull, aug.n_exo, aug.n_perf, "perf"});

  const int n_scalar = static_cast<int>(aug.structure.blocks.size());

  DkDesign out;
  double best_mu = std::numeric_limits<double>::infinity();
  std::vector<Eigen::VectorXd> sweep_scales;

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    PartitionedPlant pp;
    int entering_order = 0;
    if (iter == 0) {
      // Plain nominal design; scalings enter from the second round.
      pp = nominal_partition(aug);
    } else {
      std::vector<FittedScale> fits;
      try {
        fits.reserve(n_scalar);
        for (int i = 0; i < n_scalar; ++i) {
          std::vector<double> di(opts.grid.size());
          for (size_t j = 0; j < opts.grid.size(); ++j) di[j] = sweep_scales[j](i);
          fits.push_back(fit_scale(opts.grid, di, opts.d_order));
        }
      } catch (const DFitFailed& e) {
        out.dk.stopped = e.what();
        break;
      }
      for (const auto& f : fits) entering_order = std::max(entering_order, f.order);

      StateSpaceModel dl = fits[0].fwd;
      StateSpaceModel dr_inv = fits[0].inv;
      for (int i = 1; i < n_scalar; ++i) {
        dl = append(dl, fits[i].fwd);
        dr_inv = append(dr_inv, fits[i].inv);
      }
      const int tail_out = aug.n_perf + aug.n_meas;
      const int tail_in = aug.n_exo + aug.n_ctrl;
      dl = append(dl, StateSpaceModel::gain(Eigen::MatrixXd::Identity(tail_out, tail_out)));
      dr_inv = append(dr_inv,
                      StateSpaceModel::gain(Eigen::MatrixXd::Identity(tail_in, tail_in)));
      pp.sys = series(series(dr_inv, aug.sys), dl);
      pp.n_w = aug.n_w() + aug.n_exo;
      pp.n_u = aug.n_ctrl;
      pp.n_z = aug.n_z() + aug.n_perf;
      pp.n_y = aug.n_meas;
    }

    HinfDesign des;
    try {
      des = hinf_synthesize(pp, opts.synth);
    } catch (const std::exception& e) {
      if (iter == 0) throw;
      out.dk.stopped = e.what();
      break;
    }

    const StateSpaceModel closed =
        lft_lower(aug.sys, des.controller.sys, aug.n_meas, aug.n_ctrl);
    MuResult mu;
    try {
      mu = mu_sweep(closed, mu_struct, opts.grid);
    } catch (const NotStable& e) {
      if (iter == 0) throw;
      out.dk.stopped = e.what();
      break;
    }

    out.dk.gamma_sequence.push_back(des.controller.gamma);
    out.dk.mu_peaks.push_back(mu.peak_upper);
    out.dk.d_orders.push_back(entering_order);
    if (mu.peak_upper < best_mu) {
      best_mu = mu.peak_upper;
      out.dk.selected = static_cast<int>(out.dk.gamma_sequence.size()) - 1;
      out.controller = des.controller;
      out.controller.method = "dk";
      out.info = des.info;
    }
    sweep_scales = mu.scales;
  }

  if (out.dk.gamma_sequence.empty())
    throw NumericalFailure("dk: no completed iteration");
  return out;
}

}  // namespace tripend
