#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>

namespace tripend {

// X = Re(V2 V1^-1) from the n-dimensional stable invariant subspace of the
// 2n x 2n Hamiltonian-structured matrix H, via an ordered complex Schur
// factorization.  Fails (nullopt, reason in *why) when H has an eigenvalue
// within imag_tol*max(1,|lambda|) of the imaginary axis, when the stable
// count is not exactly n, or when V1 is numerically singular.
std::optional<Eigen::MatrixXd> stable_invariant_solution(const Eigen::MatrixXd& H,
                                                         double imag_tol,
                                                         std::string* why = nullptr);

// Stabilizing solution of A'X + XA - X B R^-1 B' X + Q = 0.  Q and R are
// symmetrized; R must be positive definite.  Throws NoStabilizingSolution
// when the Hamiltonian touches the imaginary axis or the subspace is
// defective.
Eigen::MatrixXd care_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R);

}  // namespace tripend
