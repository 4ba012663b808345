#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "swarmopt/polytraj.hpp"
#include "swarmopt/vehicle.hpp"

namespace swarmopt {

/// Thrust below this magnitude (N) is treated as the free-fall singularity.
inline constexpr double kMinThrust = 0.1;

/// Attitude and body rates implied by a flat output.
struct FlatAttitude {
  double thrust = 0.0;             // N, collective
  Mat3 rotation = Mat3::Identity();  // body to world
  Vec3 omega = Vec3::Zero();         // body frame, rad/s
};

/// Full inverse dynamics at one instant.
struct FlatInputs {
  FlatAttitude attitude;
  Vec3 alpha = Vec3::Zero();   // body angular acceleration
  Vec3 moment = Vec3::Zero();  // body moments, N m
  Eigen::Vector4d rotor_speeds = Eigen::Vector4d::Zero();  // signed square roots
};

/// Throws SingularityError when the commanded thrust is below kMinThrust.
FlatAttitude flat_attitude(const FlatOutput& f, const QuadParams& params);

/// Inverse of the mixer: signed square roots of A^-1 [thrust; moment].
Eigen::Vector4d rotor_speeds(double thrust, const Vec3& moment, const QuadParams& params);

/// Inverse dynamics at time t; the angular acceleration comes from a central
/// difference of the body rates with step h (one-sided at the ends).
FlatInputs flat_inputs(const FlatTrajectory& trajectory, double t, const QuadParams& params, double h = 1e-4);

struct MotorSpeedSeries {
  std::vector<double> times;
  std::vector<Eigen::Vector4d> speeds;
};

/// Rotor speeds at t = 0, dt, 2 dt, ... and at the final time.
MotorSpeedSeries flat_motor_speeds(const FlatTrajectory& trajectory, const QuadParams& params, double dt = 0.01);

struct LowFidelityCheck {
  bool feasible = false;
  double min_speed = 0.0;
  double max_speed = 0.0;
  double worst_time = 0.0;  // time of the first violation, if any
  std::string diagnostic;
};

/// True iff every sampled rotor speed lies in [omega_min, omega_max]. A
/// singularity is reported as infeasible with a diagnostic.
LowFidelityCheck check_feasible_low(const FlatTrajectory& trajectory, const QuadParams& params, double dt = 0.01);

/// Sample times used by the admissibility scan.
std::vector<double> sample_times(double duration, double dt);

}  // namespace swarmopt
