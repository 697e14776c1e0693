#include "tripend/sim.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

#include "tripend/errors.hpp"

namespace tripend {

Scenario tracking_scenario() {
  Scenario sc;
  sc.name = "tracking";
  sc.r << 0.0, -0.1, 0.2;
  return sc;
}

Scenario disturbance_scenario() {
  Scenario sc;
  sc.name = "disturbance";
  sc.d << 0.1, 0.1, 0.1;
  return sc;
}

Rk4Result integrate_rk4(
    const std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x0, double t_final, double dt) {
  if (!(dt > 0.0) || !(t_final > 0.0))
    throw ConfigError("integrate_rk4: t_final and dt must be positive");
  const int n_steps = static_cast<int>(std::llround(t_final / dt));

  Rk4Result out;
  out.t.resize(n_steps + 1);
  out.x.resize(x0.size(), n_steps + 1);
  out.x.col(0) = x0;
  out.t[0] = 0.0;

  Eigen::VectorXd x = x0;
  for (int k = 0; k < n_steps; ++k) {
    const double t = k * dt;
    const Eigen::VectorXd k1 = f(t, x);
    const Eigen::VectorXd k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = f(t + dt, x + dt * k3);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      out.t.resize(k + 1);
      out.x.conservativeResize(Eigen::NoChange, k + 1);
      out.nonfinite = true;
      return out;
    }
    out.t[k + 1] = (k + 1) * dt;
    out.x.col(k + 1) = x;
  }
  return out;
}

namespace {

void check_loop_shapes(const Controller& k, const StateSpaceModel& act) {
  k.sys.check();
  act.check();
  if (k.sys.inputs() != 3 || k.sys.outputs() != 2)
    throw DimensionMismatch("simulate: controller must map 3 voltages to 2 torques");
  if (act.inputs() != 1 || act.outputs() != 1)
    throw DimensionMismatch("simulate: motor model must be SISO");
}

// State order [pendulum(6), motor1(na), motor2(na), controller(nk)].
// v = C r - C x (reference converted to volts), u = Ck xk + Dk v,
// tm_i = motor(u_i), pendulum driven by Bu tm.
struct ClosedLoopLinear {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;     // constant forcing from the step inputs
  Eigen::MatrixXd Cth;   // angles
  Eigen::MatrixXd Ctm;   // motor torques
  Eigen::VectorXd Dtm;   // reference feedthrough into the torques
  Eigen::MatrixXd Cy;    // potentiometer volts
};

ClosedLoopLinear close_linear(const LinearPlant& plant, const Controller& k,
                              const StateSpaceModel& act, const Scenario& sc) {
  check_loop_shapes(k, act);
  const Eigen::Index nk = k.sys.states();
  const Eigen::Index na = act.states();
  const Eigen::Index n = 6 + 2 * na + nk;

  // Volt-domain reference: the plant's C is the potentiometer gain on the
  // angle block, so C * [r; 0] is the reference the controller compares to.
  const Eigen::Vector3d rv = plant.C.leftCols<3>() * sc.r;
  const double da = act.D(0, 0);

  Eigen::MatrixXd Ablk = Eigen::MatrixXd::Zero(2 * na, 2 * na);
  Ablk.topLeftCorner(na, na) = act.A;
  Ablk.bottomRightCorner(na, na) = act.A;
  Eigen::MatrixXd Bblk = Eigen::MatrixXd::Zero(2 * na, 2);
  Bblk.block(0, 0, na, 1) = act.B;
  Bblk.block(na, 1, na, 1) = act.B;
  Eigen::MatrixXd Cblk = Eigen::MatrixXd::Zero(2, 2 * na);
  Cblk.block(0, 0, 1, na) = act.C;
  Cblk.block(1, na, 1, na) = act.C;

  ClosedLoopLinear cl;
  cl.A.setZero(n, n);
  cl.A.topLeftCorner(6, 6) = plant.A - da * plant.Bu * k.sys.D * plant.C;
  cl.A.block(0, 6, 6, 2 * na) = plant.Bu * Cblk;
  cl.A.topRightCorner(6, nk) = da * plant.Bu * k.sys.C;
  cl.A.block(6, 0, 2 * na, 6) = -Bblk * k.sys.D * plant.C;
  cl.A.block(6, 6, 2 * na, 2 * na) = Ablk;
  cl.A.block(6, 6 + 2 * na, 2 * na, nk) = Bblk * k.sys.C;
  cl.A.bottomLeftCorner(nk, 6) = -k.sys.B * plant.C;
  cl.A.bottomRightCorner(nk, nk) = k.sys.A;

  cl.b.setZero(n);
  cl.b.head(6) = da * plant.Bu * (k.sys.D * rv) + plant.Bd * sc.d;
  cl.b.segment(6, 2 * na) = Bblk * (k.sys.D * rv);
  cl.b.tail(nk) = k.sys.B * rv;

  cl.Cth.setZero(3, n);
  cl.Cth.leftCols(3).setIdentity();
  cl.Ctm.setZero(2, n);
  cl.Ctm.leftCols(6) = -da * k.sys.D * plant.C;
  cl.Ctm.block(0, 6, 2, 2 * na) = Cblk;
  cl.Ctm.rightCols(nk) = da * k.sys.C;
  cl.Dtm = da * (k.sys.D * rv);
  cl.Cy.setZero(3, n);
  cl.Cy.leftCols(6) = plant.C;
  return cl;
}

}  // namespace

SimulationResult simulate_linear_cl(const LinearPlant& plant, const Controller& k,
                                    const Scenario& sc, const StateSpaceModel& act) {
  const ClosedLoopLinear cl = close_linear(plant, k, act, sc);
  const Eigen::Index n = cl.A.rows();
  const int n_steps = static_cast<int>(std::llround(sc.t_final / sc.dt));
  if (n_steps < 1) throw ConfigError("simulate: no steps in [0, t_final]");

  // Constant forcing, so one matrix exponential gives the exact step map;
  // this is immune to the stiffness of fast controller modes.
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = cl.A * sc.dt;
  aug.topRightCorner(n, 1) = cl.b * sc.dt;
  const Eigen::MatrixXd E = aug.exp();
  const Eigen::MatrixXd Ad = E.topLeftCorner(n, n);
  const Eigen::VectorXd bd = E.topRightCorner(n, 1);

  SimulationResult res;
  res.scenario = sc;
  res.t.resize(n_steps + 1);
  res.theta.resize(3, n_steps + 1);
  res.volts.resize(3, n_steps + 1);
  res.torque.resize(2, n_steps + 1);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (int kk = 0; kk <= n_steps; ++kk) {
    res.t[kk] = kk * sc.dt;
    res.theta.col(kk) = cl.Cth * x;
    res.volts.col(kk) = cl.Cy * x;
    res.torque.col(kk) = cl.Ctm * x + cl.Dtm;
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

SimulationResult simulate_nonlinear_cl(const PhysicalParameters& p,
                                       const CompositeParameters& c,
                                       const Controller& k, const Scenario& sc,
                                       const StateSpaceModel& act) {
  check_loop_shapes(k, act);
  const Eigen::Index nk = k.sys.states();
  const Eigen::Index na = act.states();
  const Eigen::Matrix3d G = output_gain(p);
  const Eigen::Vector3d rv = G * sc.r;
  const double da = act.D(0, 0);

  // The output grid dt can be much coarser than the fastest loop mode, so the
  // integrator substeps by the linearized closed-loop spectral radius.
  const ClosedLoopLinear cl = close_linear(linearize(p, c), k, act, sc);
  double rho = 0.0;
  {
    Eigen::EigenSolver<Eigen::MatrixXd> es(cl.A, false);
    if (es.info() == Eigen::Success)
      rho = es.eigenvalues().cwiseAbs().maxCoeff();
  }
  const int substeps =
      std::clamp(static_cast<int>(std::ceil(sc.dt * rho)), 1, 2000);

  auto command = [&](const Eigen::VectorXd& x) -> Eigen::Vector2d {
    const Eigen::Vector3d v = rv - G * x.segment<3>(0);
    return k.sys.C * x.tail(nk) + k.sys.D * v;
  };
  auto torque = [&](const Eigen::VectorXd& x) -> Eigen::Vector2d {
    const Eigen::Vector2d u = command(x);
    Eigen::Vector2d tm;
    tm(0) = (act.C * x.segment(6, na))(0) + da * u(0);
    tm(1) = (act.C * x.segment(6 + na, na))(0) + da * u(1);
    return tm;
  };

  auto f = [&](double, const Eigen::VectorXd& x) {
    PendulumState s;
    s.theta = x.segment<3>(0);
    s.omega = x.segment<3>(3);
    const Eigen::Vector2d u = command(x);
    Eigen::VectorXd dx(6 + 2 * na + nk);
    dx.segment<3>(0) = s.omega;
    dx.segment<3>(3) = forward_dynamics(p, c, s, torque(x), sc.d);
    dx.segment(6, na) = act.A * x.segment(6, na) + act.B * u(0);
    dx.segment(6 + na, na) = act.A * x.segment(6 + na, na) + act.B * u(1);
    dx.tail(nk) = k.sys.A * x.tail(nk) + k.sys.B * (rv - G * s.theta);
    return dx;
  };

  const int n_steps = static_cast<int>(std::llround(sc.t_final / sc.dt));
  if (n_steps < 1) throw ConfigError("simulate: no steps in [0, t_final]");
  const double h = sc.dt / substeps;

  SimulationResult res;
  res.scenario = sc;
  res.t.resize(n_steps + 1);
  res.theta.resize(3, n_steps + 1);
  res.volts.resize(3, n_steps + 1);
  res.torque.resize(2, n_steps + 1);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(6 + 2 * na + nk);
  auto record = [&](int kk) {
    res.t[kk] = kk * sc.dt;
    res.theta.col(kk) = x.segment<3>(0);
    res.volts.col(kk) = G * x.segment<3>(0);
    res.torque.col(kk) = torque(x);
  };
  record(0);

  for (int kk = 0; kk < n_steps; ++kk) {
    bool bad = false;
    for (int ss = 0; ss < substeps; ++ss) {
      const double t = kk * sc.dt + ss * h;
      const Eigen::VectorXd k1 = f(t, x);
      const Eigen::VectorXd k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
      const Eigen::VectorXd k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
      const Eigen::VectorXd k4 = f(t + h, x + h * k3);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!x.allFinite()) {
        bad = true;
        break;
      }
    }
    if (bad) {
      res.t.resize(kk + 1);
      res.theta.conservativeResize(Eigen::NoChange, kk + 1);
      res.volts.conservativeResize(Eigen::NoChange, kk + 1);
      res.torque.conservativeResize(Eigen::NoChange, kk + 1);
      res.nonfinite = true;
      break;
    }
    record(kk + 1);
  }
  return res;
}

Metrics compute_metrics(const SimulationResult& result) {
  Metrics m;
  m.nonfinite = result.nonfinite;
  const Eigen::Index n = result.theta.cols();
  if (n == 0) return m;

  const double rmax = result.scenario.r.cwiseAbs().maxCoeff();
  const Eigen::Index tail = std::max<Eigen::Index>(1, n / 10);

  for (int i = 0; i < 3; ++i) {
    const double r = result.scenario.r(i);
    ChannelMetrics& ch = m.ch[static_cast<size_t>(i)];
    const Eigen::RowVectorXd y = result.theta.row(i);

    if (std::abs(r) > 0.0) {
      // Fractional excursion beyond the target, in the step direction.
      const double peak =
          (std::copysign(1.0, r) * (y.array() - r)).maxCoeff() / std::abs(r);
      ch.overshoot = std::max(0.0, peak);
    } else {
      ch.overshoot = y.cwiseAbs().maxCoeff();
    }

    // 2% band; zero-reference channels settle against the largest step in
    // the scenario, or an absolute 1e-3 rad when nothing is stepped.
    const double band =
        std::abs(r) > 0.0 ? 0.02 * std::abs(r)
                          : (rmax > 0.0 ? 0.02 * rmax : 1e-3);
    ch.settling_time = 0.0;
    for (Eigen::Index kk = n - 1; kk >= 0; --kk) {
      if (std::abs(y(kk) - r) > band) {
        ch.settling_time = result.t[static_cast<size_t>(kk)];
        break;
      }
    }

    ch.sse = std::abs(y.tail(tail).mean() - r);
  }
  return m;
}

}  // namespace tripend
