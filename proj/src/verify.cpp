#include "swarmopt/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "swarmopt/collision.hpp"
#include "swarmopt/errors.hpp"
#include "swarmopt/flatness.hpp"

namespace swarmopt {

namespace {

std::string vehicle_name(int i) { return "vehicle " + std::to_string(i); }
std::string pair_name(int i, int j) { return "pair " + std::to_string(i) + "-" + std::to_string(j); }

}  // namespace

void VerificationReport::add(ConstraintCheck check) {
  passed = passed && check.passed;
  checks.push_back(std::move(check));
}

std::vector<std::string> VerificationReport::failures() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (!c.passed) out.push_back(c.constraint + " " + c.subject + " (margin " + std::to_string(c.margin) + ")");
  return out;
}

FlatOutput FiniteDifferenceTrajectory::sample(double t) const {
  const double h = h_, T = base_.duration();
  // Keep the stencil inside [0, T]; the trajectory is not smooth across the ends.
  const double c = T > 4 * h ? std::clamp(t, 2 * h, T - 2 * h) : t;
  Vec3 p[5];
  double y[5];
  for (int k = -2; k <= 2; ++k) {
    const FlatOutput f = base_.sample(c + k * h);
    p[k + 2] = f.position;
    y[k + 2] = f.yaw;
  }
  for (int k = 0; k < 5; ++k) y[k] = unwrap_near(y[k], y[2]);
  FlatOutput out;
  const FlatOutput here = base_.sample(t);
  out.position = here.position;
  out.yaw = here.yaw;
  out.velocity = (-p[4] + 8 * p[3] - 8 * p[1] + p[0]) / (12 * h);
  out.acceleration = (-p[4] + 16 * p[3] - 30 * p[2] + 16 * p[1] - p[0]) / (12 * h * h);
  out.jerk = (p[4] - 2 * p[3] + 2 * p[1] - p[0]) / (2 * h * h * h);
  out.snap = (p[4] - 4 * p[3] + 6 * p[2] - 4 * p[1] + p[0]) / (h * h * h * h);
  out.yaw_rate = (-y[4] + 8 * y[3] - 8 * y[1] + y[0]) / (12 * h);
  out.yaw_acceleration = (-y[4] + 16 * y[3] - 30 * y[2] + 16 * y[1] - y[0]) / (12 * h * h);
  return out;
}

VerificationReport verify_trajectories(const Environment& env, const std::vector<const FlatTrajectory*>& trajectories,
                                       const Allocation& x, const VerifyOptions& options) {
  const int V = env.vehicles, m = env.segments();
  if (static_cast<int>(trajectories.size()) != V || x.rows() != V || x.cols() != m)
    throw DimensionError("verify: one trajectory and one allocation row per vehicle");
  VerificationReport report;
  const QuadParams& q = env.quad;

  for (int i = 0; i < V; ++i) {
    const FlatTrajectory& traj = *trajectories[static_cast<std::size_t>(i)];

    double corridor = std::numeric_limits<double>::infinity();
    double t0 = 0.0;
    for (int j = 0; j < m; ++j) {
      const Polytope& poly = env.corridors[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      for (int k = 0; k <= options.samples_per_segment; ++k) {
        const Vec3 p = traj.position(t0 + x(i, j) * k / options.samples_per_segment);
        for (int f = 0; f < poly.faces(); ++f) {
          if (options.obstacle_faces_only && poly.obstacle_mask(f) == 0) continue;
          corridor = std::min(corridor, poly.b(f) - poly.A.row(f).dot(p));
        }
      }
      t0 += x(i, j);
    }
    report.add({"corridor", vehicle_name(i), corridor, corridor >= -options.corridor_tolerance});

    const FiniteDifferenceTrajectory fd(traj, options.fd_step);
    double speed = std::numeric_limits<double>::infinity();
    std::string subject = vehicle_name(i);
    try {
      for (double t : sample_times(traj.duration(), options.flat_dt)) {
        const Eigen::Vector4d w = flat_inputs(fd, t, q).rotor_speeds;
        speed = std::min({speed, w.minCoeff() - q.omega_min, q.omega_max - w.maxCoeff()});
      }
    } catch (const SingularityError&) {
      speed = -q.omega_max;
      subject += " (thrust singularity)";
    }
    report.add({"flatness", subject, speed, speed >= -options.speed_tolerance * q.omega_max});

    // start, formation waypoints and end, each at its own time
    double worst = (traj.position(0.0) - env.starts[static_cast<std::size_t>(i)].position).norm();
    worst = std::max(worst, (traj.position(traj.duration()) - env.ends[static_cast<std::size_t>(i)].position).norm());
    for (int k = 0; k < env.formation.count(); ++k) {
      const int e = env.formation.segment_ends[static_cast<std::size_t>(k)];
      const double t = x.row(i).head(e).sum();
      const Vec3& w = env.formation.waypoints[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].position;
      worst = std::max(worst, (traj.position(t) - w).norm());
    }
    report.add({"waypoint", vehicle_name(i), -worst, worst <= options.waypoint_tolerance});
  }

  const auto ranges = env.formation.intervals(m);
  for (std::size_t k = 0; k + 1 < ranges.size(); ++k) {
    const auto [a, b] = ranges[k];
    double worst = 0.0;
    for (int i = 1; i < V; ++i)
      worst = std::max(worst, std::abs(x.row(i).segment(a, b - a).sum() - x.row(0).segment(a, b - a).sum()));
    report.add({"synchronization", "interval " + std::to_string(k), -worst, worst <= options.sync_tolerance});
  }

  for (int i = 0; i < V; ++i)
    for (int j = i + 1; j < V; ++j) {
      const double d = min_separation(*trajectories[static_cast<std::size_t>(i)],
                                      *trajectories[static_cast<std::size_t>(j)], options.separation_dt)
                           .distance;
      report.add({"separation", pair_name(i, j), d - env.d_min, d - env.d_min >= -options.separation_tolerance});
    }

  if (options.high_fidelity) {
    std::vector<TrackResult> tracks;
    for (int i = 0; i < V; ++i) {
      TrackResult r = simulate_tracking(*trajectories[static_cast<std::size_t>(i)], q, q.controller, options.sim);
      const double margin = r.completed ? options.tracking_bound - r.max_error : -options.sim.divergence_m;
      report.add({"tracking", vehicle_name(i) + (r.completed ? "" : " (diverged)"), margin, margin >= 0.0});
      tracks.push_back(std::move(r));
    }
    for (int i = 0; i < V; ++i)
      for (int j = i + 1; j < V; ++j) {
        const double d = min_separation(tracks[static_cast<std::size_t>(i)].tracked,
                                        tracks[static_cast<std::size_t>(j)].tracked, options.separation_dt)
                             .distance;
        report.add({"tracked_separation", pair_name(i, j), d - env.d_min, d - env.d_min >= -options.separation_tolerance});
      }
  }
  return report;
}

}  // namespace swarmopt
