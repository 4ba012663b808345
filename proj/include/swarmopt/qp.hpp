#pragma once

#include <vector>

#include <Eigen/Core>

namespace swarmopt::qp {

/// minimize 1/2 x'Hx + g'x  subject to  E x = e,  C x <= d.
struct Problem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd E;
  Eigen::VectorXd e;
  Eigen::MatrixXd C;
  Eigen::VectorXd d;
};

struct Result {
  Eigen::VectorXd x;
  double objective = 0.0;
  std::vector<int> active;  // indices into the rows of C
  int iterations = 0;
};

/// Eliminates the equalities through a null-space basis and solves the
/// reduced inequality problem with the Goldfarb-Idnani dual active-set method.
///
/// `regularization` is added to the reduced Hessian, scaled by its mean
/// diagonal. Throws InfeasibleError for inconsistent equalities or an empty
/// feasible set, ConditioningError when the reduced Hessian is not positive
/// definite after regularization.
Result solve(const Problem& problem, double regularization = 1e-10);

/// Dense Goldfarb-Idnani on min 1/2 y'Hy + g'y s.t. G y <= h. H must be
/// positive definite. Returns false if the constraints are infeasible.
bool dual_active_set(const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::MatrixXd& G,
                     const Eigen::VectorXd& h, Eigen::VectorXd& y, std::vector<int>& active, int& iterations);

}  // namespace swarmopt::qp
