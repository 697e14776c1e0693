#include "tripend/vertices.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "tripend/analysis.hpp"
#include "tripend/errors.hpp"

namespace tripend {

const char* score_definition() {
  return "sum over both scenarios of peak |theta - r|_inf plus 0.1 x the "
         "largest per-channel settling time; unstable corners rank above "
         "every stable one";
}

namespace {

// Simulation of the corner-closed loop: constant step inputs, so the exact
// discrete map applies regardless of how fast the controller modes are.
SimulationResult simulate_closed(const StateSpaceModel& cl, const Eigen::Matrix3d& G,
                                 double wu, int eu_row, const Scenario& sc) {
  const Eigen::Index n = cl.states();
  // Input layout after closing the parametric corner: [wa(2) r(3) d(3) n(3)].
  // The r channels are potentiometer volts, so the rad reference converts
  // through the output gains here.
  Eigen::VectorXd u0 = Eigen::VectorXd::Zero(cl.inputs());
  u0.segment<3>(2) = G * sc.r;
  u0.segment<3>(5) = sc.d;
  const Eigen::VectorXd b = cl.B * u0;

  const int n_steps = static_cast<int>(std::llround(sc.t_final / sc.dt));
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = cl.A * sc.dt;
  aug.topRightCorner(n, 1) = b * sc.dt;
  const Eigen::MatrixXd E = aug.exp();
  const Eigen::MatrixXd Ad = E.topLeftCorner(n, n);
  const Eigen::VectorXd bd = E.topRightCorner(n, 1);

  SimulationResult res;
  res.scenario = sc;
  res.t.resize(n_steps + 1);
  res.theta.resize(3, n_steps + 1);
  res.volts.resize(3, n_steps + 1);
  res.torque.resize(2, n_steps + 1);

  const Eigen::RowVectorXd ceu0 = cl.C.row(eu_row);
  const Eigen::RowVectorXd ceu1 = cl.C.row(eu_row + 1);
  const double deu0 = cl.D.row(eu_row).dot(u0);
  const double deu1 = cl.D.row(eu_row + 1).dot(u0);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int kk = 0; kk <= n_steps; ++kk) {
    res.t[kk] = kk * sc.dt;
    const Eigen::Vector3d th = x.head<3>();
    res.theta.col(kk) = th;
    res.volts.col(kk) = G * th;
    res.torque(0, kk) = (ceu0.dot(x) + deu0) / wu;
    res.torque(1, kk) = (ceu1.dot(x) + deu1) / wu;
    if (kk == n_steps) break;
    x = Ad * x + bd;
    if (!x.allFinite()) {
      res.t.resize(kk + 1);
      res.theta.conservativeResize(Eigen::NoChange, kk + 1);
      res.volts.conservativeResize(Eigen::NoChange, kk + 1);
      res.torque.conservativeResize(Eigen::NoChange, kk + 1);
      res.nonfinite = true;
      break;
    }
  }
  return res;
}

double scenario_score(const SimulationResult& sim, const Metrics& m) {
  double peak = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double r = sim.scenario.r(i);
    peak = std::max(peak, (sim.theta.row(i).array() - r).abs().maxCoeff());
  }
  double settle = 0.0;
  for (const auto& ch : m.ch) settle = std::max(settle, ch.settling_time);
  return peak + 0.1 * settle;
}

}  // namespace

WorstCaseResult worst_case_vertices(const AugmentedPlant& aug,
                                    const PhysicalParameters& p,
                                    const Controller& k, int vertex_budget,
                                    const Scenario& tracking,
                                    const Scenario& disturbance,
                                    std::uint64_t seed) {
  if (vertex_budget < 1) throw ConfigError("worst-case: vertex_budget must be >= 1");
  const int n_real = static_cast<int>(aug.structure.blocks.size()) - 2;
  if (n_real < 1 || n_real > 30)
    throw DimensionMismatch("worst-case: unexpected parametric block count");

  const StateSpaceModel cl = lft_lower(aug.sys, k.sys, aug.n_meas, aug.n_ctrl);
  // Remaining channels: z = [zp(8) za(2) ey(3) eu(2)], w = [wp(8) wa(2) exo(9)].
  const int eu_row = n_real + 2 + 3;
  const int u_col = aug.n_w() + aug.n_exo;  // first control column in aug
  const double wu = aug.sys.D(aug.n_z() + 3, u_col);
  if (!(wu > 0.0))
    throw NumericalFailure("worst-case: could not recover the effort weight");
  const Eigen::Matrix3d G = output_gain(p);

  // Corner list: all 2^k when the budget covers them, otherwise a seeded
  // draw without replacement.  Identical seed + budget => identical list.
  const std::uint64_t total = 1ull << n_real;
  std::vector<std::uint64_t> picks;
  WorstCaseResult out;
  if (vertex_budget >= static_cast<int>(total)) {
    picks.resize(total);
    for (std::uint64_t i = 0; i < total; ++i) picks[i] = i;
    out.exhaustive = true;
  } else {
    std::mt19937_64 gen(seed ^ 0x9e3779b97f4a7c15ull);
    std::set<std::uint64_t> seen;
    while (static_cast<int>(picks.size()) < vertex_budget) {
      const std::uint64_t m = gen() & (total - 1);
      if (seen.insert(m).second) picks.push_back(m);
    }
  }

  auto evaluate = [&](const Eigen::VectorXd& delta) {
    VertexOutcome v;
    v.sign.resize(n_real);
    for (int i = 0; i < n_real; ++i)
      v.sign[i] = delta(i) > 0.0 ? 1 : (delta(i) < 0.0 ? -1 : 0);

    StateSpaceModel closed;
    try {
      closed = close_upper(cl, Eigen::MatrixXd(delta.asDiagonal()), n_real, n_real);
    } catch (const IllPosed&) {
      v.stable = false;
      v.abscissa = std::numeric_limits<double>::infinity();
      v.score = std::numeric_limits<double>::infinity();
      return v;
    }
    const StabilityReport rep = is_hurwitz(closed);
    v.stable = rep.hurwitz;
    v.abscissa = rep.spectral_abscissa;
    if (!v.stable) {
      v.score = std::numeric_limits<double>::infinity();
      return v;
    }
    const SimulationResult st = simulate_closed(closed, G, wu, eu_row, tracking);
    const SimulationResult sd = simulate_closed(closed, G, wu, eu_row, disturbance);
    v.tracking = compute_metrics(st);
    v.disturbance = compute_metrics(sd);
    if (st.nonfinite || sd.nonfinite) {
      v.score = std::numeric_limits<double>::infinity();
      return v;
    }
    v.score = scenario_score(st, v.tracking) + scenario_score(sd, v.disturbance);
    return v;
  };

  out.nominal = evaluate(Eigen::VectorXd::Zero(n_real));

  out.ranked.reserve(picks.size());
  for (const std::uint64_t mask : picks) {
    Eigen::VectorXd delta(n_real);
    for (int i = 0; i < n_real; ++i) delta(i) = (mask >> i) & 1 ? 1.0 : -1.0;
    out.ranked.push_back(evaluate(delta));
  }
  out.evaluated = static_cast<int>(out.ranked.size());

  std::stable_sort(out.ranked.begin(), out.ranked.end(),
                   [](const VertexOutcome& a, const VertexOutcome& b) {
                     if (a.stable != b.stable) return !a.stable;
                     if (!a.stable) return a.abscissa > b.abscissa;
                     return a.score > b.score;
                   });
  return out;
}

}  // namespace tripend
