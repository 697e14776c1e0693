#pragma once

#include <Eigen/Core>

#include "tripend/params.hpp"

namespace tripend {

// Configuration-dependent mass matrix M(theta), symmetric.  Positive definite
// on the operating range; forward_dynamics guards the condition number.
Eigen::Matrix3d mass_matrix(const PhysicalParameters& p,
                            const CompositeParameters& c,
                            const Eigen::Vector3d& theta);

// Constant viscous damping N.  Hinge frictions act on relative rates, pulley
// frictions on the belt-side rates, which gives the tridiagonal coupling.
Eigen::Matrix3d damping_matrix(const PhysicalParameters& p);

// Velocity-product and gravity load q(theta, omega).  The cross terms are the
// Christoffel products of the configuration-dependent mass entries, so the
// undamped unforced system conserves
//   E = 0.5 w'M(th)w + g*(M1 cos th1 + M2 cos th2 + M3 cos th3).
Eigen::Vector3d gravity_coriolis(const PhysicalParameters& p,
                                 const CompositeParameters& c,
                                 const PendulumState& s);

// Motor torques enter through the belts: tm1 drives hinge 1 against hinge 2,
// tm2 drives hinge 2 against hinge 3.
Eigen::Matrix<double, 3, 2> torque_map(const PhysicalParameters& p);

// Disturbance torques act per hinge on the relative coordinates; in absolute
// coordinates that telescopes to an upper-triangular routing.
Eigen::Matrix3d disturbance_map();

// Solves M(theta) wdot = K tm + T d - N w - q for the angular accelerations.
// Throws SingularMass when cond(M) exceeds 1e12.
Eigen::Vector3d forward_dynamics(const PhysicalParameters& p,
                                 const CompositeParameters& c,
                                 const PendulumState& s,
                                 const Eigen::Vector2d& tm,
                                 const Eigen::Vector3d& d);

// Potentiometer voltages.  Sensors 2 and 3 sit across the hinges, so they
// read relative angles.
Eigen::Vector3d measure(const PhysicalParameters& p, const Eigen::Vector3d& theta);

// Jacobian of measure(): constant, lower-bidiagonal in the gains.
Eigen::Matrix3d output_gain(const PhysicalParameters& p);

// Upright-equilibrium linearization, state x = [theta; omega].
struct LinearPlant {
  Eigen::Matrix<double, 6, 6> A;
  Eigen::Matrix<double, 6, 2> Bu;  // motor torques
  Eigen::Matrix<double, 6, 3> Bd;  // hinge disturbances
  Eigen::Matrix<double, 3, 6> C;   // potentiometer voltages
};

LinearPlant linearize(const PhysicalParameters& p, const CompositeParameters& c);

}  // namespace tripend
