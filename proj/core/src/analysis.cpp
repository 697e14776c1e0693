#include "tripend/analysis.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tripend/errors.hpp"

namespace tripend {

namespace {

double sigma_max(const Eigen::MatrixXcd& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues()(0);
}

double sigma_max_real(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

// True when the gamma-level Hamiltonian has an eigenvalue on the imaginary
// axis, i.e. the response still reaches gamma somewhere.  Requires
// gamma > sigma_max(D).
bool level_reached(const StateSpaceModel& sys, double gamma) {
  const Eigen::Index n = sys.A.rows();
  const Eigen::Index m = sys.B.cols();
  const Eigen::Index p = sys.C.rows();

  const Eigen::MatrixXd R =
      gamma * gamma * Eigen::MatrixXd::Identity(m, m) - sys.D.transpose() * sys.D;
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (llt.info() != Eigen::Success)
    throw NumericalFailure("hinf_norm: level matrix lost definiteness");

  const Eigen::MatrixXd RiDtC = llt.solve(sys.D.transpose() * sys.C);
  const Eigen::MatrixXd RiBt = llt.solve(sys.B.transpose());
  const Eigen::MatrixXd Acl = sys.A + sys.B * RiDtC;

  Eigen::MatrixXd H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = Acl;
  H.topRightCorner(n, n) = sys.B * RiBt;
  H.bottomLeftCorner(n, n) =
      -sys.C.transpose() *
      (Eigen::MatrixXd::Identity(p, p) + sys.D * llt.solve(sys.D.transpose())) * sys.C;
  H.bottomRightCorner(n, n) = -Acl.transpose();

  Eigen::EigenSolver<Eigen::MatrixXd> es(H, false);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("hinf_norm: Hamiltonian eigensolver failed");
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const auto lam = es.eigenvalues()(i);
    if (std::abs(lam.real()) <= 1e-8 * std::max(1.0, std::abs(lam))) return true;
  }
  return false;
}

}  // namespace

StabilityReport is_hurwitz(const Eigen::MatrixXd& A, double eps_stab) {
  if (A.rows() != A.cols()) throw DimensionMismatch("is_hurwitz: A not square");
  if (A.rows() == 0) return {true, -std::numeric_limits<double>::infinity()};
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("is_hurwitz: eigensolver failed");
  const double abscissa = es.eigenvalues().real().maxCoeff();
  return {abscissa < -eps_stab, abscissa};
}

StabilityReport is_hurwitz(const StateSpaceModel& sys, double eps_stab) {
  return is_hurwitz(sys.A, eps_stab);
}

NormResult hinf_norm(const StateSpaceModel& sys, double rel_tol) {
  sys.check();
  if (sys.inputs() == 0 || sys.outputs() == 0) return {0.0, true};
  if (sys.states() == 0) return {sigma_max_real(sys.D), true};

  const StabilityReport stab = is_hurwitz(sys.A);
  if (!stab.hurwitz) return {std::numeric_limits<double>::infinity(), false};

  // Bracket seed: the feedthrough plus gains at dc, at every eigenfrequency,
  // and on a coarse decade scan.  Each is a certified lower bound.
  Eigen::EigenSolver<Eigen::MatrixXd> es(sys.A, false);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("hinf_norm: eigensolver failed");
  std::vector<double> probes = {0.0};
  for (Eigen::Index i = 0; i < sys.A.rows(); ++i) {
    const auto lam = es.eigenvalues()(i);
    if (std::abs(lam.imag()) > 0.0) probes.push_back(std::abs(lam.imag()));
    probes.push_back(std::abs(lam));
  }
  for (int d = -3; d <= 4; ++d) probes.push_back(std::pow(10.0, d));

  double lo = sigma_max_real(sys.D);
  const FrequencyResponse fr = freq_response(sys, probes);
  for (const auto& v : fr.values) lo = std::max(lo, sigma_max(v));

  if (!(lo > 0.0)) {
    // No energy found anywhere it could hide: nilpotent-like C(sI-A)^-1 B
    // with zero D.  Treat as the zero system.
    if (sys.B.norm() == 0.0 || sys.C.norm() == 0.0) return {0.0, true};
    lo = 1e-300;
  }

  const double dmax = sigma_max_real(sys.D);
  double hi = std::max(2.0 * lo, dmax * (1.0 + 1e-6) + 1e-12);
  int guard = 0;
  while (level_reached(sys, hi)) {
    hi *= 2.0;
    if (++guard > 128) throw NumericalFailure("hinf_norm: no finite upper bracket");
  }

  // lo is always a certified lower bound and never exceeds the norm; keep the
  // invariant lo <= ||G|| <= hi while shrinking geometrically.
  guard = 0;
  while (hi - lo > rel_tol * hi) {
    const double mid = std::sqrt(std::max(lo, dmax * (1.0 + 1e-12)) * hi);
    if (level_reached(sys, mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (++guard > 400) break;
  }
  return {hi, true};
}

}  // namespace tripend
