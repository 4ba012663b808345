#pragma once

#include <vector>

#include <Eigen/Core>

#include "swarmopt/polynomial.hpp"
#include "swarmopt/qp.hpp"

namespace swarmopt {

/// Quadratic program over the coefficients of a degree-7 piecewise
/// polynomial with fixed durations.
///
/// Decision vector layout: ((segment * channels) + channel) * 8 + a, where a
/// indexes the local monomial s^a. Cost terms are integrals of squared time
/// derivatives; constraints are pointwise in (segment, s).
class SplineQp {
 public:
  SplineQp(int channels, std::vector<double> durations);

  int variables() const { return channels_ * segments() * kCoeffs; }
  int segments() const { return static_cast<int>(durations_.size()); }
  int index(int segment, int channel, int a) const { return ((segment * channels_) + channel) * kCoeffs + a; }

  /// Adds weight * integral of (d^order p_channel / dt^order)^2 to the cost.
  void add_cost(int channel, int order, double weight);

  /// Derivatives 0..max_order of the channel agree at every interior knot.
  void add_continuity(int channel, int max_order);

  /// d^order p_channel / dt^order at (segment, s) equals value.
  void fix(int channel, int segment, double s, int order, double value);

  /// sum_c normal(c) * p_c(segment, s) <= bound.
  void add_inequality(int segment, double s, const Eigen::VectorXd& normal, double bound);

  int inequalities() const { return static_cast<int>(ineq_rhs_.size()); }

  /// Cost matrix Q with cost = c' Q c in physical units.
  const Eigen::MatrixXd& cost_matrix() const { return cost_; }

  /// Row of the linear functional c -> d^order p_channel / dt^order (segment, s).
  Eigen::RowVectorXd functional(int channel, int segment, double s, int order) const;

  qp::Problem problem() const;

  /// Solves and returns the piecewise polynomial; throws InfeasibleError or
  /// ConditioningError from the QP layer.
  PiecewisePolynomial solve(double regularization = 1e-10, double* objective = nullptr) const;

  PiecewisePolynomial unpack(const Eigen::VectorXd& x) const;

 private:
  int channels_;
  std::vector<double> durations_;
  Eigen::MatrixXd cost_;
  std::vector<Eigen::RowVectorXd> eq_rows_;
  std::vector<double> eq_rhs_;
  std::vector<Eigen::RowVectorXd> ineq_rows_;
  std::vector<double> ineq_rhs_;
};

/// Closed-form Gram matrix of the r-th derivative of the monomials s^a on
/// [0, 1]: G(a, b) = P_r(a) P_r(b) / (a + b - 2r + 1).
Eigen::MatrixXd derivative_gram(int order);

}  // namespace swarmopt
