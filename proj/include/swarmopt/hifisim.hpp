#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "swarmopt/collision.hpp"
#include "swarmopt/flatness.hpp"
#include "swarmopt/polytraj.hpp"
#include "swarmopt/vehicle.hpp"

namespace swarmopt {

struct RigidState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Eigen::Quaterniond attitude = Eigen::Quaterniond::Identity();  // body to world
  Vec3 omega = Vec3::Zero();                                     // body frame
  Eigen::Vector4d motor_speeds = Eigen::Vector4d::Zero();
};

/// One RK4 step of the rigid body with first-order motor lag toward
/// `motor_command`, held over the step. Forces: rotor thrust, gravity and
/// linear drag; moments: rotor moments and the gyroscopic term. The
/// quaternion is renormalized afterwards.
RigidState rk4_step(const RigidState& state, const Eigen::Vector4d& motor_command, const QuadParams& params, double dt);

/// Geometric tracking controller on SO(3) with flatness feedforward of the
/// desired body rate and angular acceleration. Returns rotor speed commands
/// clamped to [omega_min, omega_max].
Eigen::Vector4d geometric_control(const RigidState& state, const FlatOutput& desired, const Vec3& omega_ff,
                                  const Vec3& alpha_ff, const QuadParams& params, const ControllerGains& gains);

struct SimOptions {
  double rate_hz = 500.0;
  double sample_hz = 100.0;
  double divergence_m = 5.0;
  double tail_s = 0.5;          // hover time simulated after the trajectory ends
  double max_duration_s = 120.0;
};

struct TrackResult {
  double max_error = 0.0;
  std::vector<double> errors;         // at sample rate
  SampledPath tracked;                // at sample rate
  std::vector<Eigen::Vector4d> motor_speeds;  // at sample rate
  bool completed = false;             // false after divergence
};

/// Closed-loop simulation starting on the trajectory's flat state at t = 0.
/// Divergence (error above divergence_m) stops the run with completed = false.
TrackResult simulate_tracking(const FlatTrajectory& trajectory, const QuadParams& params, const ControllerGains& gains,
                              const SimOptions& options = {});

struct HighFidelityCheck {
  bool feasible = false;
  TrackResult track;
};

/// feasible iff the run completed and the maximum tracking error is within
/// error_bound.
HighFidelityCheck check_feasible_high(const FlatTrajectory& trajectory, const QuadParams& params,
                                      const ControllerGains& gains, double error_bound = 0.05,
                                      const SimOptions& options = {});

}  // namespace swarmopt
