#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>

namespace tripend {

// Physical constants of the three-arm assembly.
//
// Lengths in m, masses in kg, inertias in kg m^2 (about the arm's own hinge),
// friction coefficients in N m s/rad, potentiometer gains in V/rad.
//
// Cp1/Cp2 are the *effective* pulley frictions seen at hinges 2 and 3: base
// pulley friction plus K2 times the belt coefficient Cm_i.  The defaults bake
// in a zero base term, so Cp_i = K2 * Cm_i.
struct PhysicalParameters {
  double l1 = 0.5;      // arm 1 hinge-to-hinge length
  double l2 = 0.4;      // arm 2 hinge-to-hinge length
  double h1 = 0.35;     // arm 1 hinge-to-CoM distance
  double h2 = 0.181;    // arm 2 hinge-to-CoM distance
  double h3 = 0.245;    // arm 3 hinge-to-CoM distance
  double m1 = 3.25;
  double m2 = 1.90;
  double m3 = 2.23;
  double I1 = 0.654;
  double I2 = 0.117;
  double I3 = 0.535;
  double C1 = 0.0654;   // hinge 1 viscous friction
  double C2 = 0.0232;   // hinge 2 viscous friction
  double C3 = 0.0088;   // hinge 3 viscous friction
  double Cm1 = 0.0022;  // belt 1 viscous coefficient
  double Cm2 = 0.0007;  // belt 2 viscous coefficient
  double K1 = 1.0;      // belt 1 speed ratio
  double K2 = 1.0;      // belt 2 speed ratio
  double Ip1 = 0.01;    // pulley 1 inertia
  double Ip2 = 0.01;    // pulley 2 inertia
  double Cp1 = 0.0022;  // effective pulley 1 friction (= base + K2*Cm1)
  double Cp2 = 0.0007;  // effective pulley 2 friction (= base + K2*Cm2)
  double beta1 = 1.146;   // potentiometer gain, hinge 1
  double beta2 = 1.146;   // potentiometer gain, hinge 2
  double beta3 = 0.9964;  // potentiometer gain, hinge 3
  double g = 9.81;

  // Throws ConfigError naming the offending field.  Lengths, masses,
  // inertias, gains and g must be positive; frictions non-negative.
  void validate() const;
};

// Lumped constants the equations of motion actually use.
//   Mi [kg m]  : first moments driving gravity and the velocity couplings
//   Ji [kg m^2]: effective inertias on the mass-matrix diagonal
struct CompositeParameters {
  double M1, M2, M3;
  double J1, J2, J3;
};

CompositeParameters derive_composites(const PhysicalParameters& p);

struct PendulumState {
  Eigen::Vector3d theta;  // absolute arm angles from upright, rad
  Eigen::Vector3d omega;  // rad/s
};

// Relative half-widths of the uncertain constants.  Fixed block order
// I1, I2, I3, C1, C2, C3, Cm1, Cm2; 0.2 means +/-20 %.
struct UncertaintySpec {
  static constexpr int kCount = 8;
  static constexpr std::array<const char*, kCount> kNames = {
      "I1", "I2", "I3", "C1", "C2", "C3", "Cm1", "Cm2"};

  std::array<double, kCount> width{0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2, 0.2};

  void validate() const;  // each width in [0, 1)
};

// Nominal perturbed by delta[i] in [-1, 1] per block (relative excursion
// width[i]*delta[i]).  A Cm change propagates into the effective Cp so the
// damping matrix stays consistent with the belt-friction composition.
PhysicalParameters apply_uncertainty(const PhysicalParameters& nominal,
                                     const UncertaintySpec& spec,
                                     const std::array<double, UncertaintySpec::kCount>& delta);

// Uniform draw of all eight deltas.  Same seed, same parameters, on any
// platform.
PhysicalParameters sample_parameters(const PhysicalParameters& nominal,
                                     const UncertaintySpec& spec,
                                     std::uint64_t seed);

// Corner of the uncertainty box; sign[i] is interpreted as +/-1 by sign bit.
PhysicalParameters vertex_parameters(const PhysicalParameters& nominal,
                                     const UncertaintySpec& spec,
                                     const std::array<int, UncertaintySpec::kCount>& sign);

}  // namespace tripend
