#pragma once

#include <vector>

#include "swarmopt/geometry.hpp"
#include "swarmopt/polynomial.hpp"
#include "swarmopt/polytraj.hpp"

namespace swarmopt {

/// Formation scale b(t) over the center durations: minimum integral of the
/// squared fourth derivative, b equal to the scale bounds at the start, at
/// every formation waypoint and at the end, b <= max of the two bounds of
/// each interval at the collocation points, C^4, derivatives 1..3 zero at
/// both ends. One channel.
PiecewisePolynomial formation_scale_profile(const FormationSchedule& schedule, const std::vector<double>& durations,
                                            const SnapOptions& options = {}, double* objective = nullptr);

/// Formation yaw: minimum integral of the squared second derivative through
/// the yaw references, C^4, derivatives 1..3 zero at both ends. One channel.
PiecewisePolynomial formation_yaw_profile(const FormationSchedule& schedule, const std::vector<double>& durations,
                                          const SnapOptions& options = {});

/// Regular polygon of radius max(scale_bounds) in the horizontal plane,
/// phased so that vehicle 0 sits in the direction of its start offset.
std::vector<Vec3> formation_offsets(const Environment& env);

/// Start, waypoints and end of the formation center (vehicle centroids) in
/// the per-segment intersection of the vehicle corridors.
CorridorProblem formation_center_problem(const Environment& env);

/// Support of the formation footprint along `normal`: the largest
/// normal . (scale / max_scale) R(yaw) offset_i, never negative.
double footprint_support(const std::vector<Vec3>& offsets, double scale, double max_scale, double yaw,
                         const Vec3& normal);

/// Center trajectory with every obstacle face tightened by the footprint at
/// (profile(t), yaw(t)). A zero profile gives plain min_snap.
PiecewiseTrajectory formation_center_trajectory(const Environment& env, const std::vector<double>& durations,
                                                const PiecewisePolynomial& profile, const PiecewisePolynomial& yaw,
                                                const std::vector<Vec3>& offsets, const SnapWeights& weights = {},
                                                const SnapOptions& options = {});

/// center(t) + (b(t) / b_max) R(psi(t)) offset, with yaw psi(t).
class FormationMemberTrajectory : public FlatTrajectory {
 public:
  FormationMemberTrajectory(PiecewiseTrajectory center, PiecewisePolynomial profile, PiecewisePolynomial yaw,
                            Vec3 offset, double max_scale);

  FlatOutput sample(double t) const override;
  double duration() const override { return center_.duration(); }
  Vec3 position(double t) const override;

  FormationMemberTrajectory time_scaled(double eta) const;

 private:
  PiecewiseTrajectory center_;
  PiecewisePolynomial profile_;
  PiecewisePolynomial yaw_;
  Vec3 offset_;
  double max_scale_;
};

/// Members of the formation flown over the given center durations: scale
/// and yaw profiles, tightened center, one trajectory per offset.
std::vector<FormationMemberTrajectory> formation_members(const Environment& env, const std::vector<double>& durations,
                                                         const SnapWeights& weights = {},
                                                         const SnapOptions& options = {});

struct BaselineResult {
  double makespan = 0.0;
  double eta = 1.0;                     // uniform slow-down applied to the center durations
  std::vector<double> center_durations;  // after the slow-down
  std::vector<Vec3> offsets;
  std::vector<FormationMemberTrajectory> vehicles;
};

/// Formation-control baseline: center allocation with the worst-case
/// footprint margin, profiles, tightened center trajectory, then the
/// smallest uniform time scale at which every member passes the low-fidelity
/// check. Throws InfeasibleError when the corridor cannot hold the formation.
BaselineResult formation_baseline(const Environment& env, const SnapWeights& weights = {},
                                  const SnapOptions& options = {}, double dt = 0.01);

}  // namespace swarmopt
