#include <doctest.h>

#include <Eigen/Dense>

#include <chrono>
#include <cmath>

#include "support/oracles.hpp"
#include "tripend/dynamics.hpp"
#include "tripend/errors.hpp"
#include "tripend/params.hpp"
#include "tripend/sim.hpp"

using namespace tripend;

TEST_CASE("composite constants from the table values") {
  const PhysicalParameters p;
  const CompositeParameters c = derive_composites(p);
  CHECK(c.M1 == doctest::Approx(3.2025).epsilon(1e-12));
  CHECK(c.M2 == doctest::Approx(1.2359).epsilon(1e-10));
  CHECK(c.M3 == doctest::Approx(0.54635).epsilon(1e-10));
  CHECK(c.J1 == doctest::Approx(2.084625).epsilon(1e-12));
  CHECK(c.J2 == doctest::Approx(0.5360459).epsilon(1e-8));
  CHECK(c.J3 == doctest::Approx(0.66885575).epsilon(1e-10));
}

TEST_CASE("mass matrix is symmetric and positive definite upright") {
  const PhysicalParameters p;
  const CompositeParameters c = derive_composites(p);
  const Eigen::Matrix3d M = mass_matrix(p, c, Eigen::Vector3d(0.3, -0.2, 0.1));
  CHECK((M - M.transpose()).norm() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(M);
  CHECK(es.eigenvalues()(0) > 0.0);
}

TEST_CASE("forward dynamics solves the balance it claims") {
  const PhysicalParameters p;
  const CompositeParameters c = derive_composites(p);
  PendulumState s;
  s.theta << 0.25, -0.4, 0.55;
  s.omega << 1.2, -0.7, 0.3;
  const Eigen::Vector2d tm(0.8, -0.5);
  const Eigen::Vector3d d(0.05, -0.02, 0.01);

  const Eigen::Vector3d wdot = forward_dynamics(p, c, s, tm, d);
  const Eigen::Vector3d lhs = mass_matrix(p, c, s.theta) * wdot +
                              damping_matrix(p) * s.omega +
                              gravity_coriolis(p, c, s);
  const Eigen::Vector3d rhs = torque_map(p) * tm + disturbance_map() * d;
  CHECK((lhs - rhs).norm() < 1e-10);
}

TEST_CASE("torque map columns are internal torque pairs") {
  const PhysicalParameters p;
  const Eigen::Matrix<double, 3, 2> K = torque_map(p);
  // each motor torques one arm against the next, so columns sum to zero
  CHECK(K.col(0).sum() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(K.col(1).sum() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(K(0, 1) == 0.0);
  CHECK(K(2, 0) == 0.0);
}

TEST_CASE("linearization matches central differences of the vector field") {
  const PhysicalParameters p;
  const CompositeParameters c = derive_composites(p);
  const LinearPlant lin = linearize(p, c);

  const auto t0 = std::chrono::steady_clock::now();

  auto field = [&](const Eigen::VectorXd& v) {
    PendulumState s;
    s.theta = v.segment<3>(0);
    s.omega = v.segment<3>(3);
    const Eigen::Vector2d tm = v.segment<2>(6);
    const Eigen::Vector3d d = v.segment<3>(8);
    Eigen::VectorXd dx(6);
    dx.head<3>() = s.omega;
    dx.tail<3>() = forward_dynamics(p, c, s, tm, d);
    return dx;
  };
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(11);
  const Eigen::MatrixXd J =
      oracles::fd_jacobian(field, x0, 1e-5);

  Eigen::MatrixXd got(6, 11);
  got << lin.A, lin.Bu, lin.Bd;
  CHECK((got - J).norm() / J.norm() < 1e-6);

  // output map: potentiometers are linear, so the Jacobian is exact
  auto meas = [&](const Eigen::VectorXd& th) {
    return Eigen::VectorXd(measure(p, th));
  };
  const Eigen::MatrixXd Jy = oracles::fd_jacobian(meas, Eigen::VectorXd::Zero(3), 1e-6);
  CHECK((lin.C.leftCols<3>() - Jy).norm() < 1e-8);
  CHECK(lin.C.rightCols<3>().norm() == 0.0);

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed < 1.0);
}

TEST_CASE("upright equilibrium is open-loop unstable") {
  const PhysicalParameters p;
  const LinearPlant lin = linearize(p, derive_composites(p));
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(lin.A).eigenvalues();
  CHECK(ev.real().maxCoeff() > 0.0);
}

TEST_CASE("undamped unforced motion conserves energy") {
  PhysicalParameters p;
  p.C1 = p.C2 = p.C3 = 0.0;
  p.Cm1 = p.Cm2 = 0.0;
  p.Cp1 = p.Cp2 = 0.0;
  const CompositeParameters c = derive_composites(p);
  CHECK(damping_matrix(p).norm() == 0.0);

  PendulumState s0;
  s0.theta << 0.15, -0.1, 0.25;
  s0.omega << 0.4, -0.2, 0.1;
  const double E0 = oracles::pendulum_energy(p, c, s0);

  auto f = [&](double, const Eigen::VectorXd& x) {
    PendulumState s;
    s.theta = x.head<3>();
    s.omega = x.tail<3>();
    Eigen::VectorXd dx(6);
    dx.head<3>() = s.omega;
    dx.tail<3>() =
        forward_dynamics(p, c, s, Eigen::Vector2d::Zero(), Eigen::Vector3d::Zero());
    return dx;
  };
  Eigen::VectorXd x0(6);
  x0 << s0.theta, s0.omega;
  const Rk4Result traj = integrate_rk4(f, x0, 1.0, 1e-4);
  REQUIRE_FALSE(traj.nonfinite);

  double worst = 0.0;
  for (Eigen::Index k = 0; k < traj.x.cols(); ++k) {
    PendulumState s;
    s.theta = traj.x.col(k).head<3>();
    s.omega = traj.x.col(k).tail<3>();
    worst = std::max(worst, std::abs(oracles::pendulum_energy(p, c, s) - E0));
  }
  CHECK(worst / std::abs(E0) < 1e-6);
}

TEST_CASE("potentiometers two and three read across the hinges") {
  const PhysicalParameters p;
  const Eigen::Vector3d th(0.3, 0.5, -0.2);
  const Eigen::Vector3d y = measure(p, th);
  CHECK(y(0) == doctest::Approx(p.beta1 * 0.3));
  CHECK(y(1) == doctest::Approx(p.beta2 * (0.5 - 0.3)));
  CHECK(y(2) == doctest::Approx(p.beta3 * (-0.2 - 0.5)));
  CHECK((output_gain(p) * th - y).norm() < 1e-14);
}

TEST_CASE("hinge disturbances react on the link above") {
  // delta_j torques link j and pulls -1 on link j-1; the top link has no
  // reaction partner, so column sums are (1, 0, 0)
  const Eigen::Matrix3d T = disturbance_map();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double want = (i == j) ? 1.0 : (j == i + 1 ? -1.0 : 0.0);
      CHECK(T(i, j) == want);
    }
}

TEST_CASE("parameter validation names the offender") {
  PhysicalParameters p;
  p.m1 = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  try {
    p.validate();
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("m1") != std::string::npos);
  }
  PhysicalParameters q;
  q.C2 = -1e-9;
  CHECK_THROWS_AS(q.validate(), ConfigError);
}

TEST_CASE("uncertainty draws stay inside the box and track the belts") {
  const PhysicalParameters p;
  UncertaintySpec spec;
  std::array<double, 8> delta{1, -1, 1, -1, 1, -1, 1, -1};
  const PhysicalParameters v = apply_uncertainty(p, spec, delta);
  CHECK(v.I1 == doctest::Approx(1.2 * p.I1));
  CHECK(v.I2 == doctest::Approx(0.8 * p.I2));
  CHECK(v.C1 == doctest::Approx(0.8 * p.C1));
  CHECK(v.Cm1 == doctest::Approx(1.2 * p.Cm1));
  CHECK(v.Cm2 == doctest::Approx(0.8 * p.Cm2));
  // the effective pulley friction follows its belt coefficient
  CHECK(v.Cp1 == doctest::Approx(p.Cp1 - p.K2 * p.Cm1 + v.K2 * v.Cm1));
  CHECK(v.Cp2 == doctest::Approx(p.Cp2 - p.K2 * p.Cm2 + v.K2 * v.Cm2));

  const PhysicalParameters s1 = sample_parameters(p, spec, 42);
  const PhysicalParameters s2 = sample_parameters(p, spec, 42);
  CHECK(s1.I1 == s2.I1);
  CHECK(s1.Cm2 == s2.Cm2);
  CHECK(s1.I1 >= 0.8 * p.I1);
  CHECK(s1.I1 <= 1.2 * p.I1);
}
