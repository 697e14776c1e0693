#include "tripend/dynamics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <string>

#include "tripend/errors.hpp"

namespace tripend {

namespace {

void require(bool ok, const char* field) {
  if (!ok) {
    throw ConfigError(std::string("invalid physical parameter: ") + field);
  }
}

// mt19937_64 output mapped to [0,1) by hand; std::uniform_real_distribution
// is implementation-defined and would break cross-platform reproducibility.
double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace

void PhysicalParameters::validate() const {
  require(l1 > 0, "l1");
  require(l2 > 0, "l2");
  require(h1 > 0, "h1");
  require(h2 > 0, "h2");
  require(h3 > 0, "h3");
  require(m1 > 0, "m1");
  require(m2 > 0, "m2");
  require(m3 > 0, "m3");
  require(I1 > 0, "I1");
  require(I2 > 0, "I2");
  require(I3 > 0, "I3");
  require(C1 >= 0, "C1");
  require(C2 >= 0, "C2");
  require(C3 >= 0, "C3");
  require(Cm1 >= 0, "Cm1");
  require(Cm2 >= 0, "Cm2");
  require(K1 > 0, "K1");
  require(K2 > 0, "K2");
  require(Ip1 >= 0, "Ip1");
  require(Ip2 >= 0, "Ip2");
  require(Cp1 >= 0, "Cp1");
  require(Cp2 >= 0, "Cp2");
  require(beta1 > 0, "beta1");
  require(beta2 > 0, "beta2");
  require(beta3 > 0, "beta3");
  require(g > 0, "g");
}

void UncertaintySpec::validate() const {
  for (int i = 0; i < kCount; ++i) {
    if (!(width[i] >= 0.0 && width[i] < 1.0)) {
      throw ConfigError(std::string("uncertainty width out of [0,1): ") + kNames[i]);
    }
  }
}

CompositeParameters derive_composites(const PhysicalParameters& p) {
  CompositeParameters c;
  // First moments: own CoM plus everything carried further out on the chain.
  c.M1 = p.m1 * p.h1 + (p.m2 + p.m3) * p.l1;
  c.M2 = p.m2 * p.h2 + p.m3 * p.l2;
  c.M3 = p.m3 * p.h3;
  // Effective inertias: hinge inertia plus the point-mass transport terms.
  c.J1 = p.I1 + p.m1 * p.h1 * p.h1 + (p.m2 + p.m3) * p.l1 * p.l1;
  c.J2 = p.I2 + p.m2 * p.h2 * p.h2 + p.m3 * p.l2 * p.l2;
  c.J3 = p.I3 + p.m3 * p.h3 * p.h3;
  return c;
}

Eigen::Matrix3d mass_matrix(const PhysicalParameters& p,
                            const CompositeParameters& c,
                            const Eigen::Vector3d& theta) {
  const double c12 = std::cos(theta(0) - theta(1));
  const double c13 = std::cos(theta(0) - theta(2));
  const double c23 = std::cos(theta(1) - theta(2));

  Eigen::Matrix3d M;
  // Pulleys ride the relative coordinates, hence the +Ip on the diagonal and
  // -Ip on the adjacent couplings.
  M(0, 0) = c.J1 + p.Ip1;
  M(1, 1) = c.J2 + p.Ip1 + p.Ip2;
  M(2, 2) = c.J3 + p.Ip2;
  M(0, 1) = p.l1 * c.M2 * c12 - p.Ip1;
  M(0, 2) = p.l1 * c.M3 * c13;
  M(1, 2) = p.l2 * c.M3 * c23 - p.Ip2;
  M(1, 0) = M(0, 1);
  M(2, 0) = M(0, 2);
  M(2, 1) = M(1, 2);
  return M;
}

Eigen::Matrix3d damping_matrix(const PhysicalParameters& p) {
  // Hinge 1 works against ground; hinges 2/3 and the pulleys work across the
  // relative rates, giving rank-1 blocks on (1,-1,0) and (0,1,-1).
  const double d12 = p.C2 + p.Cp1;
  const double d23 = p.C3 + p.Cp2;
  Eigen::Matrix3d N;
  N << p.C1 + d12, -d12, 0.0,
      -d12, d12 + d23, -d23,
      0.0, -d23, d23;
  return N;
}

Eigen::Vector3d gravity_coriolis(const PhysicalParameters& p,
                                 const CompositeParameters& c,
                                 const PendulumState& s) {
  const double s12 = std::sin(s.theta(0) - s.theta(1));
  const double s13 = std::sin(s.theta(0) - s.theta(2));
  const double s23 = std::sin(s.theta(1) - s.theta(2));
  const double w1 = s.omega(0), w2 = s.omega(1), w3 = s.omega(2);

  const double a12 = p.l1 * c.M2;  // pairs with the (1,2) mass entry
  const double a13 = p.l1 * c.M3;  // pairs with (1,3)
  const double a23 = p.l2 * c.M3;  // pairs with (2,3)

  Eigen::Vector3d q;
  q(0) = a12 * s12 * w2 * w2 + a13 * s13 * w3 * w3 - c.M1 * p.g * std::sin(s.theta(0));
  q(1) = -a12 * s12 * w1 * w1 + a23 * s23 * w3 * w3 - c.M2 * p.g * std::sin(s.theta(1));
  q(2) = -a13 * s13 * w1 * w1 - a23 * s23 * w2 * w2 - c.M3 * p.g * std::sin(s.theta(2));
  return q;
}

Eigen::Matrix<double, 3, 2> torque_map(const PhysicalParameters& p) {
  Eigen::Matrix<double, 3, 2> K;
  K << p.K1, 0.0,
      -p.K1, p.K2,
      0.0, -p.K2;
  return K;
}

Eigen::Matrix3d disturbance_map() {
  Eigen::Matrix3d T;
  T << 1.0, -1.0, 0.0,
      0.0, 1.0, -1.0,
      0.0, 0.0, 1.0;
  return T;
}

Eigen::Vector3d forward_dynamics(const PhysicalParameters& p,
                                 const CompositeParameters& c,
                                 const PendulumState& s,
                                 const Eigen::Vector2d& tm,
                                 const Eigen::Vector3d& d) {
  const Eigen::Matrix3d M = mass_matrix(p, c, s.theta);
  const Eigen::Vector3d rhs = torque_map(p) * tm + disturbance_map() * d -
                              damping_matrix(p) * s.omega - gravity_coriolis(p, c, s);

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(2);
  if (!(smin > smax * 1e-12)) {
    throw SingularMass("mass matrix condition number exceeds 1e12");
  }
  return svd.solve(rhs);
}

Eigen::Vector3d measure(const PhysicalParameters& p, const Eigen::Vector3d& theta) {
  return output_gain(p) * theta;
}

Eigen::Matrix3d output_gain(const PhysicalParameters& p) {
  Eigen::Matrix3d G;
  G << p.beta1, 0.0, 0.0,
      -p.beta2, p.beta2, 0.0,
      0.0, -p.beta3, p.beta3;
  return G;
}

LinearPlant linearize(const PhysicalParameters& p, const CompositeParameters& c) {
  const Eigen::Matrix3d M0 = mass_matrix(p, c, Eigen::Vector3d::Zero());

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M0, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (!(svd.singularValues()(2) > svd.singularValues()(0) * 1e-12)) {
    throw SingularMass("upright mass matrix condition number exceeds 1e12");
  }

  // d q / d theta at the origin is -g*diag(Mi); moving it to the right-hand
  // side gives the destabilizing gravity feedback.
  Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
  G(0, 0) = c.M1 * p.g;
  G(1, 1) = c.M2 * p.g;
  G(2, 2) = c.M3 * p.g;

  const Eigen::Matrix3d Minv_G = svd.solve(G);
  const Eigen::Matrix3d Minv_N = svd.solve(damping_matrix(p));
  const Eigen::Matrix<double, 3, 2> Minv_K = svd.solve(torque_map(p));
  const Eigen::Matrix3d Minv_T = svd.solve(disturbance_map());

  LinearPlant lp;
  lp.A.setZero();
  lp.A.topRightCorner<3, 3>().setIdentity();
  lp.A.bottomLeftCorner<3, 3>() = Minv_G;
  lp.A.bottomRightCorner<3, 3>() = -Minv_N;

  lp.Bu.setZero();
  lp.Bu.bottomRows<3>() = Minv_K;

  lp.Bd.setZero();
  lp.Bd.bottomRows<3>() = Minv_T;

  lp.C.setZero();
  lp.C.leftCols<3>() = output_gain(p);
  return lp;
}

PhysicalParameters apply_uncertainty(const PhysicalParameters& nominal,
                                     const UncertaintySpec& spec,
                                     const std::array<double, UncertaintySpec::kCount>& delta) {
  PhysicalParameters p = nominal;
  p.I1 = nominal.I1 * (1.0 + spec.width[0] * delta[0]);
  p.I2 = nominal.I2 * (1.0 + spec.width[1] * delta[1]);
  p.I3 = nominal.I3 * (1.0 + spec.width[2] * delta[2]);
  p.C1 = nominal.C1 * (1.0 + spec.width[3] * delta[3]);
  p.C2 = nominal.C2 * (1.0 + spec.width[4] * delta[4]);
  p.C3 = nominal.C3 * (1.0 + spec.width[5] * delta[5]);
  p.Cm1 = nominal.Cm1 * (1.0 + spec.width[6] * delta[6]);
  p.Cm2 = nominal.Cm2 * (1.0 + spec.width[7] * delta[7]);
  // The effective pulley friction carries K2*Cm; keep whatever base term the
  // nominal had and move only the belt share.
  p.Cp1 = nominal.Cp1 + nominal.K2 * (p.Cm1 - nominal.Cm1);
  p.Cp2 = nominal.Cp2 + nominal.K2 * (p.Cm2 - nominal.Cm2);
  return p;
}

PhysicalParameters sample_parameters(const PhysicalParameters& nominal,
                                     const UncertaintySpec& spec,
                                     std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::array<double, UncertaintySpec::kCount> delta{};
  // Fixed draw order = block order; do not reorder.
  for (int i = 0; i < UncertaintySpec::kCount; ++i) {
    delta[i] = 2.0 * unit_uniform(gen) - 1.0;
  }
  return apply_uncertainty(nominal, spec, delta);
}

PhysicalParameters vertex_parameters(const PhysicalParameters& nominal,
                                     const UncertaintySpec& spec,
                                     const std::array<int, UncertaintySpec::kCount>& sign) {
  std::array<double, UncertaintySpec::kCount> delta{};
  for (int i = 0; i < UncertaintySpec::kCount; ++i) {
    delta[i] = sign[i] >= 0 ? 1.0 : -1.0;
  }
  return apply_uncertainty(nominal, spec, delta);
}

}  // namespace tripend
