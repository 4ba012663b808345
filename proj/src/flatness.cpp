#include "swarmopt/flatness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "swarmopt/errors.hpp"

namespace swarmopt {

FlatAttitude flat_attitude(const FlatOutput& f, const QuadParams& params) {
  const Vec3 t = params.mass * (f.acceleration + Vec3(0.0, 0.0, params.gravity));
  const double thrust = t.norm();
  if (thrust < kMinThrust) throw SingularityError("commanded thrust below " + std::to_string(kMinThrust) + " N");
  const Vec3 zb = t / thrust;
  const Vec3 xc(std::cos(f.yaw), std::sin(f.yaw), 0.0);
  const Vec3 yc(-std::sin(f.yaw), std::cos(f.yaw), 0.0);
  const Vec3 yc_cross_zb = yc.cross(zb);
  const double n = yc_cross_zb.norm();
  if (n < 1e-9) throw SingularityError("thrust axis aligned with the heading axis");
  const Vec3 xb = yc_cross_zb / n;
  const Vec3 yb = zb.cross(xb);

  FlatAttitude out;
  out.thrust = thrust;
  out.rotation.col(0) = xb;
  out.rotation.col(1) = yb;
  out.rotation.col(2) = zb;
  const Vec3 hw = (params.mass / thrust) * (f.jerk - zb.dot(f.jerk) * zb);
  const double p = -hw.dot(yb);
  const double q = hw.dot(xb);
  const double r = (f.yaw_rate * xc.dot(xb) + q * yc.dot(zb)) / n;
  out.omega = Vec3(p, q, r);
  return out;
}

Eigen::Vector4d rotor_speeds(double thrust, const Vec3& moment, const QuadParams& params) {
  Eigen::Vector4d wrench(thrust, moment.x(), moment.y(), moment.z());
  const Eigen::Vector4d squared = params.allocation().inverse() * wrench;
  Eigen::Vector4d out;
  for (int i = 0; i < 4; ++i) out(i) = std::copysign(std::sqrt(std::abs(squared(i))), squared(i));
  return out;
}

FlatInputs flat_inputs(const FlatTrajectory& trajectory, double t, const QuadParams& params, double h) {
  FlatInputs out;
  out.attitude = flat_attitude(trajectory.sample(t), params);
  const double T = trajectory.duration();
  double lo = t - h;
  double hi = t + h;
  if (lo < 0.0) lo = t;
  if (hi > T) hi = t;
  if (hi > lo) {
    const Vec3 w_lo = lo == t ? out.attitude.omega : flat_attitude(trajectory.sample(lo), params).omega;
    const Vec3 w_hi = hi == t ? out.attitude.omega : flat_attitude(trajectory.sample(hi), params).omega;
    out.alpha = (w_hi - w_lo) / (hi - lo);
  }
  const Vec3 J = params.inertia;
  const Vec3& w = out.attitude.omega;
  out.moment = J.cwiseProduct(out.alpha) + w.cross(J.cwiseProduct(w));
  out.rotor_speeds = rotor_speeds(out.attitude.thrust, out.moment, params);
  return out;
}

std::vector<double> sample_times(double duration, double dt) {
  std::vector<double> times;
  const long n = static_cast<long>(std::floor(duration / dt + 1e-9));
  for (long k = 0; k <= n; ++k) times.push_back(k * dt);
  if (duration - times.back() > 1e-9) times.push_back(duration);
  return times;
}

MotorSpeedSeries flat_motor_speeds(const FlatTrajectory& trajectory, const QuadParams& params, double dt) {
  MotorSpeedSeries out;
  out.times = sample_times(trajectory.duration(), dt);
  for (double t : out.times) out.speeds.push_back(flat_inputs(trajectory, t, params).rotor_speeds);
  return out;
}

LowFidelityCheck check_feasible_low(const FlatTrajectory& trajectory, const QuadParams& params, double dt) {
  LowFidelityCheck out;
  out.min_speed = std::numeric_limits<double>::infinity();
  out.max_speed = -std::numeric_limits<double>::infinity();
  bool violated = false;
  for (double t : sample_times(trajectory.duration(), dt)) {
    Eigen::Vector4d w;
    try {
      w = flat_inputs(trajectory, t, params).rotor_speeds;
    } catch (const SingularityError& e) {
      out.feasible = false;
      out.worst_time = t;
      out.diagnostic = std::string("singular at t = ") + std::to_string(t) + ": " + e.what();
      return out;
    }
    out.min_speed = std::min(out.min_speed, w.minCoeff());
    out.max_speed = std::max(out.max_speed, w.maxCoeff());
    if (!violated && (w.minCoeff() < params.omega_min || w.maxCoeff() > params.omega_max)) {
      violated = true;
      out.worst_time = t;
    }
  }
  out.feasible = !violated;
  if (violated) {
    out.diagnostic = "rotor speed outside [" + std::to_string(params.omega_min) + ", " +
                     std::to_string(params.omega_max) + "] first at t = " + std::to_string(out.worst_time);
  }
  return out;
}

}  // namespace swarmopt
