#pragma once

#include <functional>
#include <vector>

#include "swarmopt/geometry.hpp"
#include "swarmopt/polynomial.hpp"
#include "swarmopt/types.hpp"

namespace swarmopt {

/// Flat outputs and their derivatives at one instant.
struct FlatOutput {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  Vec3 jerk = Vec3::Zero();
  Vec3 snap = Vec3::Zero();
  double yaw = 0.0;
  double yaw_rate = 0.0;
  double yaw_acceleration = 0.0;
};

/// Anything that can be flown: position and yaw with four derivatives.
class FlatTrajectory {
 public:
  virtual ~FlatTrajectory() = default;
  virtual FlatOutput sample(double t) const = 0;
  virtual double duration() const = 0;
  virtual Vec3 position(double t) const { return sample(t).position; }
};

/// Channels x, y, z, yaw of one vehicle.
class PiecewiseTrajectory : public FlatTrajectory {
 public:
  PiecewiseTrajectory() = default;
  explicit PiecewiseTrajectory(PiecewisePolynomial poly);

  FlatOutput sample(double t) const override;
  double duration() const override { return poly_.duration(); }
  Vec3 position(double t) const override;

  const PiecewisePolynomial& polynomial() const { return poly_; }
  int segments() const { return poly_.segments(); }
  const std::vector<double>& durations() const { return poly_.durations(); }

  PiecewiseTrajectory time_scaled(double eta) const { return PiecewiseTrajectory(poly_.time_scaled(eta)); }

 private:
  PiecewisePolynomial poly_;
};

/// Weights of the smoothness objective.
struct SnapWeights {
  double position = 1.0;  // on the integral of squared snap
  double yaw = 1.0;       // on the integral of squared yaw acceleration
};

struct SnapOptions {
  int collocation = 16;       // Chebyshev-Lobatto points per segment
  int verify_density = 10;    // verification grid = collocation * this
  double corridor_tolerance = 1e-4;
  int refine_rounds = 8;
  double regularization = 1e-10;
};

/// Boundary-value problem of a single vehicle.
struct CorridorProblem {
  std::vector<Polytope> corridor;
  Pose start;
  Pose end;
  std::vector<int> waypoint_segments;  // waypoint k is reached after this many segments
  std::vector<Pose> waypoints;
  /// Optional tightening of obstacle faces (mask 1) at time t, in meters.
  std::function<double(double)> margin;
  /// Optional direction-dependent tightening of obstacle faces: time and the
  /// face's outward unit normal to meters. Applied on top of `margin`.
  std::function<double(double, const Vec3&)> face_margin;

  int segments() const { return static_cast<int>(corridor.size()); }
};

CorridorProblem vehicle_problem(const Environment& env, int vehicle);

/// Chebyshev-Lobatto points on [0, 1] including both ends.
std::vector<double> lobatto_points(int count);

/// Minimum-snap trajectory for fixed durations with corridor containment at
/// collocation points, refined on the verification grid until the violation
/// is below options.corridor_tolerance.
PiecewiseTrajectory min_snap(const std::vector<double>& durations, const CorridorProblem& problem,
                             const SnapWeights& weights = {}, const SnapOptions& options = {});

/// mu_r * integral |snap|^2 + mu_psi * integral yaw''^2, exact.
double objective_sigma(const PiecewiseTrajectory& trajectory, const SnapWeights& weights);

/// Position part of objective_sigma with unit weight.
double snap_cost(const PiecewisePolynomial& poly, int first_channel, int channel_count);

/// Largest a_f . p(t) - b_f (+ margin on obstacle faces) over a uniform grid
/// of `samples_per_segment` + 1 points per segment.
double corridor_violation(const PiecewiseTrajectory& trajectory, const CorridorProblem& problem,
                          int samples_per_segment);

/// Durations on the simplex sum(x) = total that minimize `cost`.
///
/// Projected coordinate descent: one coordinate moves (the rest are scaled
/// to keep the total) with a golden-section search on its logarithm. Stops
/// after max_sweeps or when a sweep changes the cost by less than rel_tol.
std::vector<double> minimize_on_simplex(const std::function<double(const std::vector<double>&)>& cost,
                                        std::vector<double> start, int max_sweeps = 50, double rel_tol = 1e-6);

/// Snap-optimal split of a large total time (default 10 s per segment).
std::vector<double> initial_allocation(const CorridorProblem& problem, const SnapWeights& weights = {},
                                       const SnapOptions& options = {}, double seconds_per_segment = 10.0);

std::vector<double> initial_allocation(const Environment& env, int vehicle, const SnapWeights& weights = {},
                                       const SnapOptions& options = {});

struct ScaleResult {
  double eta = 1.0;
  std::vector<double> durations;
};

/// Smallest eta in [eta_lo, eta_hi] (bisection to tol) with oracle(eta * x)
/// true. Throws NoFeasibleScaleError if eta_hi fails.
ScaleResult scale_to_feasible(const std::vector<double>& durations,
                              const std::function<bool(const std::vector<double>&)>& oracle, double eta_lo = 0.01,
                              double eta_hi = 20.0, double tol = 1e-3);

/// Angle equivalent to `angle` within pi of `reference`.
double unwrap_near(double angle, double reference);

}  // namespace swarmopt
