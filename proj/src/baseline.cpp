#include "swarmopt/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "swarmopt/errors.hpp"
#include "swarmopt/flatness.hpp"
#include "swarmopt/spline_qp.hpp"

namespace swarmopt {

namespace {

// Interval boundaries in segments: 0, e_1, ..., e_Nf, m.
std::vector<int> boundaries(const FormationSchedule& schedule, int segments) {
  std::vector<int> b{0};
  for (int e : schedule.segment_ends) b.push_back(e);
  b.push_back(segments);
  return b;
}

// Value constraint at boundary k: end of segment b_k - 1, or start of segment 0.
void fix_boundary(SplineQp& qp, int segment_count, int boundary_segment, int order, double value) {
  if (boundary_segment == 0)
    qp.fix(0, 0, 0.0, order, value);
  else
    qp.fix(0, std::min(boundary_segment, segment_count) - 1, 1.0, order, value);
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Derivatives 0..4 of cos(psi(t)) and sin(psi(t)) from those of psi.
void trig_derivatives(const double psi[5], double c[5], double s[5]) {
  const double cs = std::cos(psi[0]), sn = std::sin(psi[0]);
  // f^(k) of cos: cos, -sin, -cos, sin, cos; of sin: sin, cos, -sin, -cos, sin
  const double fc[5] = {cs, -sn, -cs, sn, cs};
  const double fs[5] = {sn, cs, -sn, -cs, sn};
  const double p1 = psi[1], p2 = psi[2], p3 = psi[3], p4 = psi[4];
  auto chain = [&](const double f[5], double out[5]) {
    out[0] = f[0];
    out[1] = f[1] * p1;
    out[2] = f[2] * p1 * p1 + f[1] * p2;
    out[3] = f[3] * p1 * p1 * p1 + 3.0 * f[2] * p1 * p2 + f[1] * p3;
    out[4] = f[4] * p1 * p1 * p1 * p1 + 6.0 * f[3] * p1 * p1 * p2 + f[2] * (3.0 * p2 * p2 + 4.0 * p1 * p3) + f[1] * p4;
  };
  chain(fc, c);
  chain(fs, s);
}

}  // namespace

PiecewisePolynomial formation_scale_profile(const FormationSchedule& schedule, const std::vector<double>& durations,
                                            const SnapOptions& options, double* objective) {
  const int m = static_cast<int>(durations.size());
  const std::vector<int> b = boundaries(schedule, m);
  if (schedule.scale_bounds.size() != b.size()) throw DimensionError("scale bounds: one per start, formation and end");
  for (double v : schedule.scale_bounds)
    if (!(v > 0.0)) throw ValidationError("scale bounds must be positive");

  SplineQp qp(1, durations);
  qp.add_cost(0, 4, 1.0);
  qp.add_continuity(0, 4);
  for (std::size_t k = 0; k < b.size(); ++k) fix_boundary(qp, m, b[k], 0, schedule.scale_bounds[k]);
  // members start and stop at rest
  for (int r = 1; r <= 3; ++r) {
    qp.fix(0, 0, 0.0, r, 0.0);
    qp.fix(0, m - 1, 1.0, r, 0.0);
  }
  const std::vector<double> colloc = lobatto_points(options.collocation);
  const Eigen::VectorXd up = Eigen::VectorXd::Ones(1);
  for (std::size_t k = 0; k + 1 < b.size(); ++k) {
    const double cap = std::max(schedule.scale_bounds[k], schedule.scale_bounds[k + 1]);
    for (int j = b[k]; j < b[k + 1]; ++j)
      for (double s : colloc) qp.add_inequality(j, s, up, cap);
  }
  return qp.solve(options.regularization, objective);
}

PiecewisePolynomial formation_yaw_profile(const FormationSchedule& schedule, const std::vector<double>& durations,
                                          const SnapOptions& options) {
  const int m = static_cast<int>(durations.size());
  const std::vector<int> b = boundaries(schedule, m);
  if (schedule.yaw_refs.size() != b.size()) throw DimensionError("yaw refs: one per start, formation and end");
  SplineQp qp(1, durations);
  qp.add_cost(0, 2, 1.0);
  // the heading rotates the offsets, so it must be as smooth as the positions
  qp.add_continuity(0, 4);
  double previous = schedule.yaw_refs.front();
  for (std::size_t k = 0; k < b.size(); ++k) {
    previous = unwrap_near(schedule.yaw_refs[k], previous);
    fix_boundary(qp, m, b[k], 0, previous);
  }
  for (int r = 1; r <= 3; ++r) {
    qp.fix(0, 0, 0.0, r, 0.0);
    qp.fix(0, m - 1, 1.0, r, 0.0);
  }
  return qp.solve(options.regularization);
}

std::vector<Vec3> formation_offsets(const Environment& env) {
  const int V = env.vehicles;
  const auto& bounds = env.formation.scale_bounds;
  const double radius = bounds.empty() ? 0.0 : *std::max_element(bounds.begin(), bounds.end());
  std::vector<Vec3> out;
  if (V == 1) return {Vec3::Zero()};
  Vec3 centroid = Vec3::Zero();
  for (const Pose& p : env.starts) centroid += p.position;
  centroid /= V;
  const Vec3 d = env.starts.front().position - centroid;
  const double yaw0 = bounds.empty() ? 0.0 : env.formation.yaw_refs.front();
  const double phase = (d.head<2>().norm() > 1e-9 ? std::atan2(d.y(), d.x()) : 0.0) - yaw0;
  for (int i = 0; i < V; ++i) {
    const double a = phase + 2.0 * M_PI * i / V;
    out.emplace_back(radius * std::cos(a), radius * std::sin(a), 0.0);
  }
  return out;
}

CorridorProblem formation_center_problem(const Environment& env) {
  const int V = env.vehicles, m = env.segments();
  CorridorProblem p;
  for (int j = 0; j < m; ++j) {
    Polytope poly = env.corridors[0][static_cast<std::size_t>(j)];
    for (int i = 1; i < V; ++i) poly = intersect(poly, env.corridors[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    p.corridor.push_back(poly);
  }
  auto centroid = [&](auto pose_of) {
    Vec3 c = Vec3::Zero();
    for (int i = 0; i < V; ++i) c += pose_of(i).position;
    return Vec3(c / V);
  };
  const auto& yaw = env.formation.yaw_refs;
  p.start = Pose{centroid([&](int i) { return env.starts[static_cast<std::size_t>(i)]; }), yaw.empty() ? 0.0 : yaw.front()};
  p.end = Pose{centroid([&](int i) { return env.ends[static_cast<std::size_t>(i)]; }), yaw.empty() ? 0.0 : yaw.back()};
  p.waypoint_segments = env.formation.segment_ends;
  for (int k = 0; k < env.formation.count(); ++k)
    p.waypoints.push_back(Pose{centroid([&](int i) { return env.formation.waypoints[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)]; }),
                               yaw.size() > static_cast<std::size_t>(k + 1) ? yaw[static_cast<std::size_t>(k + 1)] : 0.0});
  return p;
}

double footprint_support(const std::vector<Vec3>& offsets, double scale, double max_scale, double yaw,
                         const Vec3& normal) {
  if (!(max_scale > 0.0)) return 0.0;
  const double c = std::cos(yaw), s = std::sin(yaw);
  double best = 0.0;
  for (const Vec3& o : offsets) {
    const Vec3 r(c * o.x() - s * o.y(), s * o.x() + c * o.y(), o.z());
    best = std::max(best, normal.dot(r) * scale / max_scale);
  }
  return best;
}

PiecewiseTrajectory formation_center_trajectory(const Environment& env, const std::vector<double>& durations,
                                                const PiecewisePolynomial& profile, const PiecewisePolynomial& yaw,
                                                const std::vector<Vec3>& offsets, const SnapWeights& weights,
                                                const SnapOptions& options) {
  CorridorProblem p = formation_center_problem(env);
  const auto& bounds = env.formation.scale_bounds;
  const double max_scale = bounds.empty() ? 1.0 : *std::max_element(bounds.begin(), bounds.end());
  p.face_margin = [&](double t, const Vec3& n) {
    return footprint_support(offsets, profile.evaluate(t, 0)(0), max_scale, yaw.evaluate(t, 0)(0), n);
  };
  for (const Polytope& poly : p.corridor) {
    try {
      interior_point(poly);
    } catch (const ValidationError&) {
      throw InfeasibleError("formation corridor: vehicle corridors do not overlap");
    }
  }
  try {
    return min_snap(durations, p, weights, options);
  } catch (const ConditioningError& e) {
    throw InfeasibleError(std::string("formation center: ") + e.what());
  }
}

FormationMemberTrajectory::FormationMemberTrajectory(PiecewiseTrajectory center, PiecewisePolynomial profile,
                                                     PiecewisePolynomial yaw, Vec3 offset, double max_scale)
    : center_(std::move(center)), profile_(std::move(profile)), yaw_(std::move(yaw)), offset_(offset),
      max_scale_(max_scale) {}

FlatOutput FormationMemberTrajectory::sample(double t) const {
  FlatOutput c = center_.sample(t);
  double b[5], psi[5], cs[5], sn[5];
  for (int k = 0; k < 5; ++k) {
    b[k] = profile_.evaluate(t, k)(0) / max_scale_;
    psi[k] = yaw_.evaluate(t, k)(0);
  }
  trig_derivatives(psi, cs, sn);
  // u = R(psi) offset and its derivatives; z is constant
  Vec3 u[5];
  for (int k = 0; k < 5; ++k)
    u[k] = Vec3(cs[k] * offset_.x() - sn[k] * offset_.y(), sn[k] * offset_.x() + cs[k] * offset_.y(),
                k == 0 ? offset_.z() : 0.0);
  Vec3 d[5];
  for (int n = 0; n < 5; ++n) {
    d[n] = Vec3::Zero();
    for (int k = 0; k <= n; ++k) d[n] += binomial(n, k) * b[k] * u[n - k];
  }
  FlatOutput out;
  out.position = c.position + d[0];
  out.velocity = c.velocity + d[1];
  out.acceleration = c.acceleration + d[2];
  out.jerk = c.jerk + d[3];
  out.snap = c.snap + d[4];
  out.yaw = psi[0];
  out.yaw_rate = psi[1];
  out.yaw_acceleration = psi[2];
  return out;
}

Vec3 FormationMemberTrajectory::position(double t) const {
  const double b = profile_.evaluate(t, 0)(0) / max_scale_, psi = yaw_.evaluate(t, 0)(0);
  const double c = std::cos(psi), s = std::sin(psi);
  return center_.position(t) + b * Vec3(c * offset_.x() - s * offset_.y(), s * offset_.x() + c * offset_.y(), offset_.z());
}

FormationMemberTrajectory FormationMemberTrajectory::time_scaled(double eta) const {
  return FormationMemberTrajectory(center_.time_scaled(eta), profile_.time_scaled(eta), yaw_.time_scaled(eta), offset_,
                                   max_scale_);
}

std::vector<FormationMemberTrajectory> formation_members(const Environment& env, const std::vector<double>& durations,
                                                         const SnapWeights& weights, const SnapOptions& options) {
  const auto& bounds = env.formation.scale_bounds;
  const double max_scale = bounds.empty() ? 1.0 : *std::max_element(bounds.begin(), bounds.end());
  const std::vector<Vec3> offsets = formation_offsets(env);
  const PiecewisePolynomial profile = formation_scale_profile(env.formation, durations, options);
  const PiecewisePolynomial yaw = formation_yaw_profile(env.formation, durations, options);
  const PiecewiseTrajectory center = formation_center_trajectory(env, durations, profile, yaw, offsets, weights, options);
  std::vector<FormationMemberTrajectory> members;
  for (const Vec3& o : offsets) members.emplace_back(center, profile, yaw, o, max_scale);
  return members;
}

BaselineResult formation_baseline(const Environment& env, const SnapWeights& weights, const SnapOptions& options,
                                  double dt) {
  validate(env);
  BaselineResult r;
  r.offsets = formation_offsets(env);

  // The allocation is chosen against the footprint at full scale in any heading.
  CorridorProblem worst = formation_center_problem(env);
  const auto offsets = r.offsets;
  worst.face_margin = [offsets](double, const Vec3& n) {
    double best = 0.0;
    for (const Vec3& o : offsets) best = std::max(best, n.head<2>().norm() * o.head<2>().norm() + n.z() * o.z());
    return best;
  };
  std::vector<double> x;
  try {
    x = initial_allocation(worst, weights, options);
  } catch (const ConditioningError& e) {
    throw InfeasibleError(std::string("formation does not fit the corridor: ") + e.what());
  }
  for (double v : x)
    if (!std::isfinite(v)) throw InfeasibleError("formation does not fit the corridor");

  const std::vector<FormationMemberTrajectory> members = formation_members(env, x, weights, options);

  auto members_ok = [&](double eta) {
    for (const auto& mtraj : members)
      if (!check_feasible_low(mtraj.time_scaled(eta), env.quad, dt).feasible) return false;
    return true;
  };
  const std::vector<double> unit{1.0};
  const ScaleResult s = scale_to_feasible(unit, [&](const std::vector<double>& e) { return members_ok(e[0]); });
  r.eta = s.eta;
  for (double v : x) r.center_durations.push_back(v * r.eta);
  // Rebuilt rather than time-scaled, so that the result can be reproduced
  // from the durations alone.
  r.vehicles = formation_members(env, r.center_durations, weights, options);
  for (const auto& mtraj : r.vehicles)
    if (!check_feasible_low(mtraj, env.quad, dt).feasible)
      throw NoFeasibleScaleError("formation members rebuilt at the scaled durations fail the rotor check");
  r.makespan = r.vehicles.front().duration();
  return r;
}

}  // namespace swarmopt
