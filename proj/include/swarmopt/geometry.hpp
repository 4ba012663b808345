#pragma once

#include <filesystem>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "swarmopt/types.hpp"
#include "swarmopt/vehicle.hpp"

namespace swarmopt {

/// Convex region {r : A r <= b}. Rows of A have unit norm.
///
/// `obstacle_mask(i)` is 1 when face i is a true obstacle boundary and 0 when
/// trajectories may pass through it into the neighbouring region.
struct Polytope {
  Eigen::Matrix<double, Eigen::Dynamic, 3> A;
  Eigen::VectorXd b;
  Eigen::VectorXi obstacle_mask;

  /// Normalizes each row of A (and the matching entry of b). An empty mask
  /// marks every face as an obstacle boundary.
  static Polytope from_halfspaces(const Eigen::Matrix<double, Eigen::Dynamic, 3>& A,
                                  const Eigen::VectorXd& b,
                                  const Eigen::VectorXi& mask = {});

  /// Axis-aligned box with all faces marked as obstacles.
  static Polytope box(const Vec3& lower, const Vec3& upper);

  int faces() const { return static_cast<int>(b.size()); }

  /// max_i (a_i . r - b_i); positive means outside.
  double max_violation(const Vec3& r) const;

  bool contains(const Vec3& r, double slack = 0.0) const { return max_violation(r) <= slack; }
};

/// Intersection obtained by stacking the face lists.
Polytope intersect(const Polytope& lhs, const Polytope& rhs);

struct InteriorPoint {
  Vec3 center;
  double radius;  // Chebyshev radius, > 1e-9
};

/// Chebyshev center of the polytope.
///
/// Throws ValidationError if the polytope is unbounded, empty, or thinner
/// than 1e-9 m.
InteriorPoint interior_point(const Polytope& polytope);

/// True iff the polytope is nonempty and bounded in every axis direction.
bool is_bounded(const Polytope& polytope);

/// Synchronized formation waypoints.
///
/// Waypoint k is attained after the first `segment_ends[k]` segments of every
/// vehicle, i.e. at the end of segment e_k in 1-based numbering.
struct FormationSchedule {
  std::vector<int> segment_ends;
  std::vector<std::vector<Pose>> waypoints;  // [vehicle][formation]
  std::vector<double> scale_bounds;          // start, formations..., end (m)
  std::vector<double> yaw_refs;              // start, formations..., end (rad)

  int count() const { return static_cast<int>(segment_ends.size()); }

  /// Half-open segment ranges between consecutive formation waypoints,
  /// from the start to the end of the trajectory (count() + 1 entries).
  std::vector<std::pair<int, int>> intervals(int segments) const;
};

struct Environment {
  int vehicles = 0;
  std::vector<std::vector<Polytope>> corridors;  // [vehicle][segment]
  std::vector<Pose> starts;
  std::vector<Pose> ends;
  FormationSchedule formation;
  double d_min = 0.4;  // m, centroid to centroid
  QuadParams quad;

  int segments() const { return corridors.empty() ? 0 : static_cast<int>(corridors.front().size()); }
  int pairs() const { return vehicles * (vehicles - 1) / 2; }
};

/// Checks every environment invariant; the message names the violated
/// invariant and the offending indices.
void validate(const Environment& env);

/// Parses the JSON environment document and validates it.
Environment parse_environment(std::string_view text);

/// Reads, parses and validates an environment file.
Environment load_environment(const std::filesystem::path& path);

}  // namespace swarmopt
