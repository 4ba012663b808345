#pragma once

#include <Eigen/Core>

namespace swarmopt {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Position (m) and yaw (rad).
struct Pose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
};

/// Row-major time allocation: one row per vehicle, one column per segment (s).
using Allocation = Eigen::MatrixXd;

}  // namespace swarmopt
