#include "swarmopt/polynomial.hpp"

#include <algorithm>

#include "swarmopt/errors.hpp"

namespace swarmopt {

double falling_factorial(int a, int r) {
  if (r > a) return 0.0;
  double out = 1.0;
  for (int k = 0; k < r; ++k) out *= static_cast<double>(a - k);
  return out;
}

PiecewisePolynomial::PiecewisePolynomial(std::vector<double> durations, std::vector<Eigen::MatrixXd> coeffs)
    : durations_(std::move(durations)), coeffs_(std::move(coeffs)) {
  if (durations_.size() != coeffs_.size()) throw DimensionError("PiecewisePolynomial: one coefficient block per segment");
  if (durations_.empty()) throw DimensionError("PiecewisePolynomial: no segments");
  knots_.assign(1, 0.0);
  for (std::size_t j = 0; j < durations_.size(); ++j) {
    if (!(durations_[j] > 0.0)) throw ValidationError("PiecewisePolynomial: durations must be positive");
    if (coeffs_[j].rows() != coeffs_[0].rows() || coeffs_[j].cols() != coeffs_[0].cols()) {
      throw DimensionError("PiecewisePolynomial: coefficient blocks differ in shape");
    }
    knots_.push_back(knots_.back() + durations_[j]);
  }
}

int PiecewisePolynomial::locate(double t) const {
  auto it = std::upper_bound(knots_.begin() + 1, knots_.end() - 1, t);
  return static_cast<int>(it - knots_.begin()) - 1;
}

double PiecewisePolynomial::derivative(int segment, double s, int channel, int order) const {
  const Eigen::MatrixXd& c = coeffs_[segment];
  const int n = static_cast<int>(c.rows());
  double acc = 0.0;
  for (int a = n - 1; a >= order; --a) acc = acc * s + c(a, channel) * falling_factorial(a, order);
  double scale = 1.0;
  for (int k = 0; k < order; ++k) scale /= durations_[segment];
  return acc * scale;
}

Eigen::VectorXd PiecewisePolynomial::evaluate(double t, int order) const {
  const int ch = channels();
  Eigen::VectorXd out(ch);
  if (t < 0.0 || t > duration()) {
    if (order > 0) return Eigen::VectorXd::Zero(ch);
    const int j = t < 0.0 ? 0 : segments() - 1;
    const double s = t < 0.0 ? 0.0 : 1.0;
    for (int c = 0; c < ch; ++c) out(c) = derivative(j, s, c, 0);
    return out;
  }
  const int j = locate(t);
  const double s = std::clamp((t - knots_[j]) / durations_[j], 0.0, 1.0);
  for (int c = 0; c < ch; ++c) out(c) = derivative(j, s, c, order);
  return out;
}

PiecewisePolynomial PiecewisePolynomial::time_scaled(double eta) const {
  std::vector<double> d = durations_;
  for (double& x : d) x *= eta;
  return PiecewisePolynomial(std::move(d), coeffs_);
}

}  // namespace swarmopt
