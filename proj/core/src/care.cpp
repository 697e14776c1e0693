#include "tripend/care.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>

#include "tripend/errors.hpp"

namespace tripend {

namespace {

using Cplx = std::complex<double>;

// Swaps the diagonal order of the 2x2 upper-triangular block at (k-1, k),
// updating T and accumulating the rotation into U.  The rotation's first
// column is the unit eigenvector of the block for the lower-right eigenvalue,
// which moves that eigenvalue up by one slot.
void swap_adjacent(Eigen::MatrixXcd& T, Eigen::MatrixXcd& U, Eigen::Index k) {
  const Cplx a = T(k - 1, k - 1);
  const Cplx b = T(k - 1, k);
  const Cplx c = T(k, k);

  const Cplx v0 = b;
  const Cplx v1 = c - a;
  const double nrm = std::sqrt(std::norm(v0) + std::norm(v1));
  if (!(nrm > 0.0)) return;  // equal eigenvalues, order is immaterial

  const Cplx q00 = v0 / nrm;
  const Cplx q10 = v1 / nrm;
  // Unitary completion [q00 -conj(q10); q10 conj(q00)].
  Eigen::Matrix2cd Q;
  Q << q00, -std::conj(q10), q10, std::conj(q00);

  T.block(k - 1, 0, 2, T.cols()) = Q.adjoint() * T.block(k - 1, 0, 2, T.cols());
  T.block(0, k - 1, T.rows(), 2) = T.block(0, k - 1, T.rows(), 2) * Q;
  U.block(0, k - 1, U.rows(), 2) = U.block(0, k - 1, U.rows(), 2) * Q;
  // Clean the subdiagonal fill-in; the rotation makes it zero analytically.
  T(k, k - 1) = Cplx(0.0, 0.0);
}

}  // namespace

std::optional<Eigen::MatrixXd> stable_invariant_solution(const Eigen::MatrixXd& H,
                                                         double imag_tol,
                                                         std::string* why) {
  const Eigen::Index n2 = H.rows();
  if (n2 % 2 != 0 || H.cols() != n2) throw DimensionMismatch("stable_invariant_solution");
  const Eigen::Index n = n2 / 2;

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(H.cast<Cplx>(), true);
  if (schur.info() != Eigen::Success) {
    if (why) *why = "Schur factorization failed";
    return std::nullopt;
  }
  Eigen::MatrixXcd T = schur.matrixT();
  Eigen::MatrixXcd U = schur.matrixU();

  Eigen::Index stable = 0;
  for (Eigen::Index i = 0; i < n2; ++i) {
    const Cplx lam = T(i, i);
    if (std::abs(lam.real()) < imag_tol * std::max(1.0, std::abs(lam))) {
      if (why) *why = "eigenvalue within tolerance of the imaginary axis";
      return std::nullopt;
    }
    if (lam.real() < 0.0) ++stable;
  }
  if (stable != n) {
    if (why) *why = "stable eigenvalue count differs from n";
    return std::nullopt;
  }

  // Selection sort on the diagonal: pull each leftmost stable eigenvalue into
  // position with adjacent swaps.
  for (Eigen::Index target = 0; target < n; ++target) {
    Eigen::Index src = target;
    while (src < n2 && !(T(src, src).real() < 0.0)) ++src;
    for (Eigen::Index k = src; k > target; --k) swap_adjacent(T, U, k);
  }

  const Eigen::MatrixXcd V1 = U.topLeftCorner(n, n);
  const Eigen::MatrixXcd V2 = U.bottomLeftCorner(n, n);

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V1);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(n - 1);
  if (!(smin > smax * 1e-13) || !(smax > 0.0)) {
    if (why) *why = "stable subspace not complementary (V1 singular)";
    return std::nullopt;
  }

  const Eigen::MatrixXcd Xc = V1.transpose()
                                  .fullPivLu()
                                  .solve(V2.transpose())
                                  .transpose();  // V2 * V1^-1
  Eigen::MatrixXd X = Xc.real();
  X = 0.5 * (X + X.transpose()).eval();
  return X;
}

Eigen::MatrixXd care_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != B.cols() || R.cols() != B.cols())
    throw DimensionMismatch("care_solve");

  const Eigen::MatrixXd Qs = 0.5 * (Q + Q.transpose());
  const Eigen::MatrixXd Rs = 0.5 * (R + R.transpose());

  Eigen::LLT<Eigen::MatrixXd> llt(Rs);
  if (llt.info() != Eigen::Success)
    throw NoStabilizingSolution("care_solve: R is not positive definite");
  const Eigen::MatrixXd BRinvBt = B * llt.solve(B.transpose());

  Eigen::MatrixXd H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = A;
  H.topRightCorner(n, n) = -BRinvBt;
  H.bottomLeftCorner(n, n) = -Qs;
  H.bottomRightCorner(n, n) = -A.transpose();

  std::string why;
  auto X = stable_invariant_solution(H, 1e-8, &why);
  if (!X) throw NoStabilizingSolution("care_solve: " + why);
  return *X;
}

}  // namespace tripend
