#include "swarmopt/spline_qp.hpp"

#include <cmath>

#include "swarmopt/errors.hpp"

namespace swarmopt {

Eigen::MatrixXd derivative_gram(int order) {
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(kCoeffs, kCoeffs);
  for (int a = order; a < kCoeffs; ++a) {
    for (int b = order; b < kCoeffs; ++b) {
      G(a, b) = falling_factorial(a, order) * falling_factorial(b, order) / static_cast<double>(a + b - 2 * order + 1);
    }
  }
  return G;
}

SplineQp::SplineQp(int channels, std::vector<double> durations) : channels_(channels), durations_(std::move(durations)) {
  if (channels_ < 1 || durations_.empty()) throw DimensionError("SplineQp: need at least one channel and one segment");
  for (double x : durations_) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ValidationError("SplineQp: durations must be positive and finite");
  }
  cost_ = Eigen::MatrixXd::Zero(variables(), variables());
}

void SplineQp::add_cost(int channel, int order, double weight) {
  const Eigen::MatrixXd G = derivative_gram(order);
  for (int j = 0; j < segments(); ++j) {
    const double scale = weight * std::pow(durations_[j], 1 - 2 * order);
    cost_.block(index(j, channel, 0), index(j, channel, 0), kCoeffs, kCoeffs) += scale * G;
  }
}

Eigen::RowVectorXd SplineQp::functional(int channel, int segment, double s, int order) const {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(variables());
  const double scale = std::pow(durations_[segment], -order);
  for (int a = order; a < kCoeffs; ++a) {
    row(index(segment, channel, a)) = scale * falling_factorial(a, order) * std::pow(s, a - order);
  }
  return row;
}

void SplineQp::add_continuity(int channel, int max_order) {
  for (int j = 0; j + 1 < segments(); ++j) {
    for (int r = 0; r <= max_order; ++r) {
      Eigen::RowVectorXd row = functional(channel, j, 1.0, r) - functional(channel, j + 1, 0.0, r);
      const double norm = row.norm();
      eq_rows_.push_back(row / norm);
      eq_rhs_.push_back(0.0);
    }
  }
}

void SplineQp::fix(int channel, int segment, double s, int order, double value) {
  Eigen::RowVectorXd row = functional(channel, segment, s, order);
  const double norm = row.norm();
  eq_rows_.push_back(row / norm);
  eq_rhs_.push_back(value / norm);
}

void SplineQp::add_inequality(int segment, double s, const Eigen::VectorXd& normal, double bound) {
  if (normal.size() != channels_) throw DimensionError("SplineQp: inequality normal has wrong size");
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(variables());
  for (int c = 0; c < channels_; ++c) {
    if (normal(c) == 0.0) continue;
    row += normal(c) * functional(c, segment, s, 0);
  }
  const double norm = row.norm();
  if (norm == 0.0) return;
  ineq_rows_.push_back(row / norm);
  ineq_rhs_.push_back(bound / norm);
}

qp::Problem SplineQp::problem() const {
  const int n = variables();
  qp::Problem p;
  const double scale = cost_.diagonal().maxCoeff();
  p.H = 2.0 * cost_ / (scale > 0.0 ? scale : 1.0);
  p.g = Eigen::VectorXd::Zero(n);
  p.E.resize(static_cast<Eigen::Index>(eq_rows_.size()), n);
  p.e.resize(static_cast<Eigen::Index>(eq_rows_.size()));
  for (std::size_t i = 0; i < eq_rows_.size(); ++i) {
    p.E.row(i) = eq_rows_[i];
    p.e(i) = eq_rhs_[i];
  }
  p.C.resize(static_cast<Eigen::Index>(ineq_rows_.size()), n);
  p.d.resize(static_cast<Eigen::Index>(ineq_rows_.size()));
  for (std::size_t i = 0; i < ineq_rows_.size(); ++i) {
    p.C.row(i) = ineq_rows_[i];
    p.d(i) = ineq_rhs_[i];
  }
  return p;
}

PiecewisePolynomial SplineQp::unpack(const Eigen::VectorXd& x) const {
  std::vector<Eigen::MatrixXd> coeffs;
  for (int j = 0; j < segments(); ++j) {
    Eigen::MatrixXd c(kCoeffs, channels_);
    for (int ch = 0; ch < channels_; ++ch) c.col(ch) = x.segment(index(j, ch, 0), kCoeffs);
    coeffs.push_back(std::move(c));
  }
  return PiecewisePolynomial(durations_, std::move(coeffs));
}

PiecewisePolynomial SplineQp::solve(double regularization, double* objective) const {
  const qp::Result r = qp::solve(problem(), regularization);
  if (objective != nullptr) *objective = r.x.dot(cost_ * r.x);
  return unpack(r.x);
}

}  // namespace swarmopt
