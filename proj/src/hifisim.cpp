#include "swarmopt/hifisim.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "swarmopt/errors.hpp"

namespace swarmopt {
namespace {

struct Rates {
  Vec3 dp;
  Vec3 dv;
  Eigen::Vector4d dq;  // (w, x, y, z)
  Vec3 dw;
  Eigen::Vector4d dm;
};

Eigen::Vector4d coeffs_wxyz(const Eigen::Quaterniond& q) { return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z()); }

Eigen::Quaterniond from_wxyz(const Eigen::Vector4d& v) { return Eigen::Quaterniond(v(0), v(1), v(2), v(3)); }

Rates derivative(const Vec3& v, const Eigen::Vector4d& qv, const Vec3& w, const Eigen::Vector4d& motors,
                 const Eigen::Vector4d& command, const QuadParams& params) {
  const Eigen::Vector4d squared = motors.cwiseAbs2();
  const Eigen::Vector4d wrench = params.allocation() * squared;
  const Eigen::Quaterniond q = from_wxyz(qv);
  const Mat3 R = q.normalized().toRotationMatrix();
  const Vec3 J = params.inertia;

  Rates r;
  r.dv = (R.col(2) * wrench(0) - params.drag * v) / params.mass - Vec3(0.0, 0.0, params.gravity);
  const Eigen::Quaterniond wq(0.0, w.x(), w.y(), w.z());
  r.dq = 0.5 * coeffs_wxyz(q * wq);
  const Vec3 moment(wrench(1), wrench(2), wrench(3));
  r.dw = (moment - w.cross(J.cwiseProduct(w))).cwiseQuotient(J);
  r.dm = (command - motors) / params.motor_time_constant;
  return r;
}

Vec3 vee(const Mat3& S) { return Vec3(S(2, 1), S(0, 2), S(1, 0)); }

Mat3 hat(const Vec3& w) {
  Mat3 S;
  S << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return S;
}

}  // namespace

RigidState rk4_step(const RigidState& s, const Eigen::Vector4d& command, const QuadParams& params, double dt) {
  const Eigen::Vector4d q0 = coeffs_wxyz(s.attitude);
  auto eval = [&](const Vec3& v, const Eigen::Vector4d& q, const Vec3& w, const Eigen::Vector4d& m) {
    Rates r = derivative(v, q, w, m, command, params);
    r.dp = v;
    return r;
  };
  const Rates k1 = eval(s.velocity, q0, s.omega, s.motor_speeds);
  const Rates k2 = eval(s.velocity + 0.5 * dt * k1.dv, q0 + 0.5 * dt * k1.dq, s.omega + 0.5 * dt * k1.dw,
                        s.motor_speeds + 0.5 * dt * k1.dm);
  const Rates k3 = eval(s.velocity + 0.5 * dt * k2.dv, q0 + 0.5 * dt * k2.dq, s.omega + 0.5 * dt * k2.dw,
                        s.motor_speeds + 0.5 * dt * k2.dm);
  const Rates k4 = eval(s.velocity + dt * k3.dv, q0 + dt * k3.dq, s.omega + dt * k3.dw, s.motor_speeds + dt * k3.dm);

  RigidState out;
  out.position = s.position + dt / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
  out.velocity = s.velocity + dt / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
  out.attitude = from_wxyz(q0 + dt / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq)).normalized();
  out.omega = s.omega + dt / 6.0 * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);
  out.motor_speeds = s.motor_speeds + dt / 6.0 * (k1.dm + 2.0 * k2.dm + 2.0 * k3.dm + k4.dm);
  return out;
}

Eigen::Vector4d geometric_control(const RigidState& state, const FlatOutput& desired, const Vec3& omega_ff,
                                  const Vec3& alpha_ff, const QuadParams& params, const ControllerGains& gains) {
  const Mat3 R = state.attitude.toRotationMatrix();
  const Vec3 ep = state.position - desired.position;
  const Vec3 ev = state.velocity - desired.velocity;
  Vec3 force = params.mass * (desired.acceleration + Vec3(0.0, 0.0, params.gravity)) -
               gains.position.cwiseProduct(ep) - gains.velocity.cwiseProduct(ev);
  if (force.norm() < kMinThrust) force = Vec3(0.0, 0.0, kMinThrust);

  const Vec3 zd = force.normalized();
  const Vec3 yc(-std::sin(desired.yaw), std::cos(desired.yaw), 0.0);
  Vec3 xd = yc.cross(zd);
  if (xd.norm() < 1e-9) xd = R.col(0) - R.col(0).dot(zd) * zd;
  xd.normalize();
  Mat3 Rd;
  Rd.col(0) = xd;
  Rd.col(1) = zd.cross(xd);
  Rd.col(2) = zd;

  const Mat3 RtRd = R.transpose() * Rd;
  const Vec3 eR = 0.5 * vee(Rd.transpose() * R - RtRd);
  const Vec3 w = state.omega;
  const Vec3 wd = RtRd * omega_ff;
  const Vec3 ew = w - wd;
  const Vec3 J = params.inertia;
  const Vec3 moment = -gains.attitude.cwiseProduct(eR) - gains.rate.cwiseProduct(ew) + w.cross(J.cwiseProduct(w)) -
                      J.cwiseProduct(hat(w) * wd - RtRd * alpha_ff);
  const double thrust = force.dot(R.col(2));

  const Eigen::Vector4d wrench(thrust, moment.x(), moment.y(), moment.z());
  Eigen::Vector4d squared = params.allocation().inverse() * wrench;
  const double lo = params.omega_min * params.omega_min;
  const double hi = params.omega_max * params.omega_max;
  for (int i = 0; i < 4; ++i) squared(i) = std::clamp(squared(i), lo, hi);
  return squared.cwiseSqrt();
}

TrackResult simulate_tracking(const FlatTrajectory& trajectory, const QuadParams& params, const ControllerGains& gains,
                              const SimOptions& options) {
  const double T = trajectory.duration();
  if (!(T < options.max_duration_s)) throw ValidationError("simulate_tracking: trajectory longer than the runaway guard");
  const double dt = 1.0 / options.rate_hz;
  const int per_sample = std::max(1, static_cast<int>(std::lround(options.rate_hz / options.sample_hz)));
  const double sample_dt = per_sample * dt;
  const long steps = static_cast<long>(std::ceil((T + options.tail_s) / dt - 1e-9));

  auto feedforward = [&](double t, FlatOutput& desired, Vec3& omega, Vec3& alpha) {
    desired = trajectory.sample(t);
    try {
      const FlatInputs in = flat_inputs(trajectory, t, params);
      omega = in.attitude.omega;
      alpha = in.alpha;
      return in;
    } catch (const SingularityError&) {
      omega.setZero();
      alpha.setZero();
      return FlatInputs{};
    }
  };

  RigidState state;
  FlatOutput desired;
  Vec3 omega_ff;
  Vec3 alpha_ff;
  const FlatInputs start = feedforward(0.0, desired, omega_ff, alpha_ff);
  state.position = desired.position;
  state.velocity = desired.velocity;
  state.attitude = Eigen::Quaterniond(start.attitude.rotation);
  state.omega = start.attitude.omega;
  state.motor_speeds = start.rotor_speeds.cwiseMax(params.omega_min).cwiseMin(params.omega_max);
  if (start.attitude.thrust == 0.0) state.motor_speeds.setConstant(params.hover_speed());

  TrackResult result;
  std::vector<Vec3> samples;
  result.completed = true;
  for (long k = 0; k <= steps; ++k) {
    const double t = k * dt;
    if (k > 0) feedforward(t, desired, omega_ff, alpha_ff);
    if (k % per_sample == 0) {
      const double err = (state.position - desired.position).norm();
      samples.push_back(state.position);
      result.errors.push_back(err);
      result.motor_speeds.push_back(state.motor_speeds);
      result.max_error = std::max(result.max_error, err);
      if (!(err <= options.divergence_m)) {
        result.completed = false;
        break;
      }
    }
    if (k == steps) break;
    const Eigen::Vector4d command = geometric_control(state, desired, omega_ff, alpha_ff, params, gains);
    state = rk4_step(state, command, params, dt);
  }
  result.tracked = SampledPath(sample_dt, std::move(samples));
  return result;
}

HighFidelityCheck check_feasible_high(const FlatTrajectory& trajectory, const QuadParams& params,
                                      const ControllerGains& gains, double error_bound, const SimOptions& options) {
  HighFidelityCheck out;
  out.track = simulate_tracking(trajectory, params, gains, options);
  out.feasible = out.track.completed && out.track.max_error <= error_bound;
  return out;
}

}  // namespace swarmopt
