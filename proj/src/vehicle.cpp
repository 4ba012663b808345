#include "swarmopt/vehicle.hpp"

#include <cmath>
#include <string>

#include "swarmopt/errors.hpp"

namespace swarmopt {

void QuadParams::validate() const {
  auto positive = [](double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw ValidationError(std::string("quad_params.") + name + " must be positive");
    }
  };
  positive(mass, "mass_kg");
  positive(inertia.x(), "inertia[0]");
  positive(inertia.y(), "inertia[1]");
  positive(inertia.z(), "inertia[2]");
  positive(arm_length, "arm_length_m");
  positive(thrust_coeff, "thrust_coeff");
  positive(torque_coeff, "torque_coeff");
  positive(omega_min, "omega_min");
  positive(omega_max, "omega_max");
  positive(gravity, "gravity");
  positive(motor_time_constant, "motor_time_constant_s");
  if (drag < 0.0) throw ValidationError("quad_params.drag must be non-negative");
  if (!(omega_min < omega_max)) throw ValidationError("quad_params: omega_min must be below omega_max");
}

Eigen::Matrix4d QuadParams::allocation() const {
  const double kf = thrust_coeff;
  const double km = torque_coeff;
  const double d = arm_length / std::sqrt(2.0);
  Eigen::Matrix4d A;
  // Rotor positions: (d,d), (-d,d), (-d,-d), (d,-d).
  A << kf, kf, kf, kf,
       kf * d, kf * d, -kf * d, -kf * d,
       -kf * d, kf * d, kf * d, -kf * d,
       km, -km, km, -km;
  return A;
}

double QuadParams::hover_speed() const {
  return std::sqrt(mass * gravity / (4.0 * thrust_coeff));
}

}  // namespace swarmopt
