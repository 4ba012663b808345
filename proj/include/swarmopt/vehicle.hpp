#pragma once

#include <Eigen/Core>

#include "swarmopt/types.hpp"

namespace swarmopt {

/// Gains of the cascaded geometric tracking controller used by the
/// high-fidelity simulation. Units follow a 1 kg reference vehicle.
struct ControllerGains {
  Vec3 position{16.0, 16.0, 20.0};
  Vec3 velocity{8.0, 8.0, 9.0};
  Vec3 attitude{1.6, 1.6, 0.9};
  Vec3 rate{0.14, 0.14, 0.12};
};

/// Quadrotor in X configuration.
struct QuadParams {
  double mass = 1.0;                            // kg
  Vec3 inertia{4.9e-3, 4.9e-3, 8.8e-3};         // kg m^2, body principal axes
  double arm_length = 0.16;                     // m, hub to rotor
  double thrust_coeff = 1.9e-6;                 // N s^2
  double torque_coeff = 2.6e-8;                 // N m s^2
  double omega_min = 150.0;                     // rad/s
  double omega_max = 2800.0;                    // rad/s
  double gravity = 9.81;                        // m/s^2
  double drag = 0.1;                            // N s/m, simulation only
  double motor_time_constant = 0.03;            // s, simulation only
  ControllerGains controller;

  /// Throws ValidationError when a field is non-positive or the speed range is empty.
  void validate() const;

  /// Maps squared rotor speeds to (collective thrust, Mx, My, Mz).
  ///
  /// Rotors sit at 45, 135, 225 and 315 degrees; rotors 1 and 3 spin so that
  /// their drag torque is positive about body z.
  Eigen::Matrix4d allocation() const;

  double hover_speed() const;
};

}  // namespace swarmopt
