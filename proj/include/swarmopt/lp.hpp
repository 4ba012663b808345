#pragma once

#include <Eigen/Core>

namespace swarmopt::lp {

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
  Status status = Status::Infeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
};

/// maximize c'x subject to A x <= b with x free.
///
/// Dense two-phase tableau simplex with Bland's rule. Intended for the
/// handful of variables that interior-point and boundedness checks need.
Result maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                const Eigen::VectorXd& b);

}  // namespace swarmopt::lp
