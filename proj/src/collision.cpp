#include "swarmopt/collision.hpp"

#include "swarmopt/errors.hpp"

namespace swarmopt {

SampledPath::SampledPath(double dt, std::vector<Vec3> points) : dt_(dt), points_(std::move(points)) {
  if (!(dt_ > 0.0)) throw ValidationError("SampledPath: dt must be positive");
  if (points_.empty()) throw DimensionError("SampledPath: no samples");
}

Vec3 SampledPath::position(double t) const {
  if (t <= 0.0) return points_.front();
  const double u = t / dt_;
  const std::size_t k = static_cast<std::size_t>(std::floor(u));
  if (k + 1 >= points_.size()) return points_.back();
  const double w = u - static_cast<double>(k);
  return (1.0 - w) * points_[k] + w * points_[k + 1];
}

}  // namespace swarmopt
