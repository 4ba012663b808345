#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "swarmopt/types.hpp"

namespace swarmopt {

/// Uniformly sampled positions starting at t = 0; linear in between and
/// held at the last sample afterwards.
class SampledPath {
 public:
  SampledPath() = default;
  SampledPath(double dt, std::vector<Vec3> points);

  Vec3 position(double t) const;
  double duration() const { return points_.empty() ? 0.0 : dt_ * static_cast<double>(points_.size() - 1); }
  double dt() const { return dt_; }
  const std::vector<Vec3>& points() const { return points_; }

 private:
  double dt_ = 0.01;
  std::vector<Vec3> points_;
};

inline constexpr double kSeparationStep = 0.005;

struct Separation {
  double distance = std::numeric_limits<double>::infinity();
  double time = 0.0;
};

/// Minimum centroid distance on the grid k * dt over [0, max(T_a, T_b)],
/// final time included. Paths hold their last position after they end.
template <class PathA, class PathB>
Separation min_separation(const PathA& a, const PathB& b, double dt = kSeparationStep) {
  const double horizon = std::max(a.duration(), b.duration());
  const long n = static_cast<long>(std::floor(horizon / dt + 1e-9));
  Separation best;
  auto visit = [&](double t) {
    const double d = (a.position(t) - b.position(t)).norm();
    if (d < best.distance) {
      best.distance = d;
      best.time = t;
    }
  };
  for (long k = 0; k <= n; ++k) visit(static_cast<double>(k) * dt);
  if (horizon - static_cast<double>(n) * dt > 1e-12) visit(horizon);
  return best;
}

/// True iff the grid minimum separation is at least d_min.
template <class PathA, class PathB>
bool check_pair(const PathA& a, const PathB& b, double d_min, double dt = kSeparationStep) {
  return min_separation(a, b, dt).distance >= d_min;
}

}  // namespace swarmopt
