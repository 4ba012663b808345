#pragma once

#include <string>
#include <vector>

#include "swarmopt/geometry.hpp"
#include "swarmopt/hifisim.hpp"
#include "swarmopt/polytraj.hpp"
#include "swarmopt/types.hpp"

namespace swarmopt {

// Tolerances of the verification pass. They are looser than the optimizer's
// own checks: it runs on a different grid and with numerical derivatives.
struct VerifyOptions {
  int samples_per_segment = 400;
  double corridor_tolerance = 1e-3;     // m
  bool obstacle_faces_only = false;     // formation members cross passage faces
  double flat_dt = 0.005;               // s
  double fd_step = 5e-3;                // s, derivative stencil
  double speed_tolerance = 0.01;        // relative to the rotor limits
  double separation_dt = 0.001;         // s
  double separation_tolerance = 1e-3;   // m
  double sync_tolerance = 1e-9;         // s
  double waypoint_tolerance = 1e-6;     // m
  bool high_fidelity = false;           // also simulate tracking
  double tracking_bound = 0.05;         // m
  SimOptions sim;
};

struct ConstraintCheck {
  std::string constraint;  // corridor, flatness, separation, synchronization, waypoint, tracking, tracked_separation
  std::string subject;     // "vehicle 0", "pair 0-1", ...
  double margin = 0.0;     // positive when satisfied
  bool passed = false;
};

struct VerificationReport {
  bool passed = true;
  std::vector<ConstraintCheck> checks;

  void add(ConstraintCheck check);
  /// "constraint subject (margin)" for every failed check.
  std::vector<std::string> failures() const;
};

/// Position and yaw of `base`, with every derivative taken by central
/// differences of the position.
class FiniteDifferenceTrajectory : public FlatTrajectory {
 public:
  FiniteDifferenceTrajectory(const FlatTrajectory& base, double step) : base_(base), h_(step) {}
  FlatOutput sample(double t) const override;
  double duration() const override { return base_.duration(); }
  Vec3 position(double t) const override { return base_.position(t); }

 private:
  const FlatTrajectory& base_;
  double h_;
};

/// Independent check of one trajectory per vehicle against the environment.
/// Row i of `x` holds the segment durations of vehicle i.
VerificationReport verify_trajectories(const Environment& env, const std::vector<const FlatTrajectory*>& trajectories,
                                       const Allocation& x, const VerifyOptions& options = {});

}  // namespace swarmopt
