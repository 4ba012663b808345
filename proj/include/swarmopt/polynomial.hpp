#pragma once

#include <vector>

#include <Eigen/Core>

namespace swarmopt {

inline constexpr int kDegree = 7;
inline constexpr int kCoeffs = kDegree + 1;

/// a! / (a - r)!, zero when r > a.
double falling_factorial(int a, int r);

/// Multi-channel piecewise polynomial.
///
/// Segment j is stored in its local coordinate s = (t - t_j) / x_j in [0, 1]:
/// coeffs(j) is (degree + 1) x channels with row a multiplying s^a.
/// Derivatives in t pick up a factor x_j^-r, so scaling every duration by
/// eta with unchanged coefficients is an exact time reparameterization.
class PiecewisePolynomial {
 public:
  PiecewisePolynomial() = default;
  PiecewisePolynomial(std::vector<double> durations, std::vector<Eigen::MatrixXd> coeffs);

  int segments() const { return static_cast<int>(durations_.size()); }
  int channels() const { return coeffs_.empty() ? 0 : static_cast<int>(coeffs_.front().cols()); }
  int degree() const { return coeffs_.empty() ? 0 : static_cast<int>(coeffs_.front().rows()) - 1; }
  double duration() const { return knots_.empty() ? 0.0 : knots_.back(); }

  const std::vector<double>& durations() const { return durations_; }
  /// Cumulative times, segments() + 1 entries starting at 0.
  const std::vector<double>& knots() const { return knots_; }
  const Eigen::MatrixXd& coeffs(int segment) const { return coeffs_[segment]; }

  /// Segment containing t; the last segment owns t == duration().
  int locate(double t) const;

  /// Derivative of the given order of one channel at local coordinate s.
  double derivative(int segment, double s, int channel, int order) const;

  /// All channels at time t. Outside [0, T] the value is held and the
  /// derivatives of order >= 1 vanish.
  Eigen::VectorXd evaluate(double t, int order) const;

  /// Same coefficients on durations multiplied by eta.
  PiecewisePolynomial time_scaled(double eta) const;

 private:
  std::vector<double> durations_;
  std::vector<double> knots_;
  std::vector<Eigen::MatrixXd> coeffs_;
};

}  // namespace swarmopt
