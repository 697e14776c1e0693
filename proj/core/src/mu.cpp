#include "tripend/mu.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "tripend/analysis.hpp"
#include "tripend/errors.hpp"

namespace tripend {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// Interconnection convention: M maps w -> z, block i of Delta maps the
// cols_i-wide z slice back to the rows_i-wide w slice.  Scalar blocks are
// treated as complex discs; the real parameters therefore get a conservative
// bound, which only errs on the safe side.
struct Offsets {
  std::vector<int> z, w;
};

Offsets block_offsets(const BlockStructure& bs) {
  Offsets off;
  int oz = 0, ow = 0;
  for (const auto& b : bs.blocks) {
    off.z.push_back(oz);
    off.w.push_back(ow);
    oz += b.cols;
    ow += b.rows;
  }
  return off;
}

// Scaled matrix D_L M D_R^-1 for per-block positive scales d.
MatrixXcd apply_scales(const MatrixXcd& M, const BlockStructure& bs,
                       const Offsets& off, const VectorXd& d) {
  MatrixXcd G = M;
  for (size_t i = 0; i < bs.blocks.size(); ++i) {
    G.middleRows(off.z[i], bs.blocks[i].cols) *= d(static_cast<int>(i));
    G.middleCols(off.w[i], bs.blocks[i].rows) /= d(static_cast<int>(i));
  }
  return G;
}

}  // namespace

MuBound mu_upper(const Eigen::MatrixXcd& M, const BlockStructure& structure,
                 int max_iters, double rel_tol) {
  if (M.rows() != structure.z_dim() || M.cols() != structure.w_dim())
    throw DimensionMismatch("mu_upper: matrix does not match the block structure");
  const int nb = static_cast<int>(structure.blocks.size());
  if (nb == 0) throw DimensionMismatch("mu_upper: empty block structure");

  MuBound out;
  out.scales = VectorXd::Ones(nb);
  if (M.norm() == 0.0) {
    out.value = 0.0;
    return out;
  }

  const Offsets off = block_offsets(structure);
  VectorXd t = VectorXd::Zero(nb);  // log scales, last block fixed as gauge

  Eigen::JacobiSVD<MatrixXcd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double value = svd.singularValues()(0);
  double step = 0.25;

  for (int it = 0; it < max_iters; ++it) {
    const VectorXcd u = svd.matrixU().col(0);
    const VectorXcd v = svd.matrixV().col(0);
    VectorXd grad = VectorXd::Zero(nb);
    for (int i = 0; i + 1 < nb; ++i) {
      const double uz = u.segment(off.z[i], structure.blocks[i].cols).squaredNorm();
      const double vw = v.segment(off.w[i], structure.blocks[i].rows).squaredNorm();
      grad(i) = value * (uz - vw);
    }
    const double gnorm = grad.norm();
    if (gnorm < 1e-12 * std::max(1.0, value)) break;

    // Backtracking subgradient step in the log coordinates.
    bool improved = false;
    for (int bt = 0; bt < 12; ++bt) {
      const VectorXd t_try = t - (step / gnorm) * grad;
      Eigen::JacobiSVD<MatrixXcd> s2(apply_scales(M, structure, off, t_try.array().exp()));
      const double v2 = s2.singularValues()(0);
      if (v2 < value) {
        const double drop = (value - v2) / value;
        t = t_try;
        svd.compute(apply_scales(M, structure, off, t.array().exp()),
                    Eigen::ComputeThinU | Eigen::ComputeThinV);
        value = v2;
        improved = true;
        if (drop < rel_tol) it = max_iters;  // converged
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    step = std::min(step * 2.0, 1.0);
  }

  out.value = value;
  out.scales = t.array().exp();
  return out;
}

double mu_lower(const Eigen::MatrixXcd& M, const BlockStructure& structure) {
  if (M.rows() != structure.z_dim() || M.cols() != structure.w_dim())
    throw DimensionMismatch("mu_lower: matrix does not match the block structure");
  const int nb = static_cast<int>(structure.blocks.size());
  const Offsets off = block_offsets(structure);
  const int max_iters = 30;

  double best = 0.0;
  if (M.norm() == 0.0) return best;

  // Greedy ascent on rho(M Delta) over unit-norm structured Delta.  Any
  // iterate is a certificate, so the running best is always a valid bound.
  auto build_delta = [&](const VectorXcd& zdir, const VectorXcd& wdir) {
    MatrixXcd D = MatrixXcd::Zero(structure.w_dim(), structure.z_dim());
    for (int i = 0; i < nb; ++i) {
      const VectorXcd zi = zdir.segment(off.z[i], structure.blocks[i].cols);
      const VectorXcd wi = wdir.segment(off.w[i], structure.blocks[i].rows);
      const double nz = zi.norm(), nw = wi.norm();
      if (nz > 0.0 && nw > 0.0)
        D.block(off.w[i], off.z[i], structure.blocks[i].rows,
                structure.blocks[i].cols) = (wi / nw) * (zi / nz).adjoint();
    }
    return D;
  };

  Eigen::JacobiSVD<MatrixXcd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  MatrixXcd Delta = build_delta(svd.matrixU().col(0), svd.matrixV().col(0));

  for (int it = 0; it < max_iters; ++it) {
    const Eigen::ComplexEigenSolver<MatrixXcd> es(M * Delta, true);
    if (es.info() != Eigen::Success) break;
    int k = 0;
    es.eigenvalues().cwiseAbs().maxCoeff(&k);
    const double rho = std::abs(es.eigenvalues()(k));
    if (rho > best) best = rho;

    const VectorXcd x = es.eigenvectors().col(k);  // z-space
    // Left eigenvector of M Delta via the adjoint problem.
    const Eigen::ComplexEigenSolver<MatrixXcd> esa((M * Delta).adjoint(), true);
    if (esa.info() != Eigen::Success) break;
    int ka = 0;
    (esa.eigenvalues().array() - std::conj(es.eigenvalues()(k)))
        .abs()
        .minCoeff(&ka);
    const VectorXcd y = esa.eigenvectors().col(ka);

    const MatrixXcd Dnew = build_delta(x, M.adjoint() * y);
    if ((Dnew - Delta).norm() < 1e-10 * std::max(1.0, Delta.norm())) break;
    Delta = Dnew;
  }
  return best;
}

MuResult mu_sweep(const StateSpaceModel& sys, const BlockStructure& structure,
                  const std::vector<double>& grid) {
  sys.check();
  if (sys.outputs() != structure.z_dim() || sys.inputs() != structure.w_dim())
    throw DimensionMismatch("mu_sweep: loop dimensions do not match the structure");
  if (grid.empty()) throw DimensionMismatch("mu_sweep: empty grid");

  const StabilityReport rep = is_hurwitz(sys);
  if (!rep.hurwitz)
    throw NotStable("mu_sweep: the interconnection is not internally stable");

  MuResult res;
  res.grid = grid;
  res.upper.resize(grid.size());
  res.lower.resize(grid.size());
  res.scales.resize(grid.size());
  res.peak_upper = 0.0;
  res.peak_omega = grid.front();

  for (size_t j = 0; j < grid.size(); ++j) {
    const Eigen::MatrixXcd M = eval_response(sys, grid[j]);
    const MuBound ub = mu_upper(M, structure);
    const double lb = mu_lower(M, structure);
    res.upper[j] = ub.value;
    res.lower[j] = std::min(lb, ub.value);
    res.scales[j] = ub.scales;
    if (ub.value > res.peak_upper) {
      res.peak_upper = ub.value;
      res.peak_omega = grid[j];
    }
  }
  res.robust = res.peak_upper < 1.0;
  return res;
}

}  // namespace tripend
