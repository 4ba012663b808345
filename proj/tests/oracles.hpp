#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace swarmopt::testing {

// Dense discretization of the rest-to-rest minimum-snap problem for one
// channel: the snap is piecewise constant on a grid of step h and the state
// (p, v, a, j) is integrated exactly. Interior constraints fix p at grid
// indices. Returns (objective, positions at every grid node).
struct SnapOracleResult {
  double objective = 0.0;
  std::vector<double> positions;
};

inline SnapOracleResult discretized_min_snap(double p0, double p_end, double total, double h,
                                             const std::vector<std::pair<double, double>>& fixes) {
  const int n = static_cast<int>(std::lround(total / h));
  Eigen::Matrix4d Phi;
  Phi << 1, h, h * h / 2, h * h * h / 6,  //
      0, 1, h, h * h / 2,                 //
      0, 0, 1, h,                         //
      0, 0, 0, 1;
  Eigen::Vector4d B(h * h * h * h / 24, h * h * h / 6, h * h / 2, h);
  const Eigen::Vector4d s0(p0, 0, 0, 0);

  std::vector<std::pair<int, Eigen::RowVector4d>> functionals;
  std::vector<double> targets;
  for (int r = 0; r < 4; ++r) {
    Eigen::RowVector4d c = Eigen::RowVector4d::Zero();
    c(r) = 1.0;
    functionals.emplace_back(n, c);
    targets.push_back(r == 0 ? p_end : 0.0);
  }
  for (const auto& [t, value] : fixes) {
    functionals.emplace_back(static_cast<int>(std::lround(t / h)), Eigen::RowVector4d(1, 0, 0, 0));
    targets.push_back(value);
  }
  const int rows = static_cast<int>(functionals.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, n);
  Eigen::VectorXd rhs(rows);
  for (int i = 0; i < rows; ++i) {
    const int K = functionals[i].first;
    Eigen::RowVector4d v = functionals[i].second;
    for (int k = K - 1; k >= 0; --k) {
      A(i, k) = v * B;
      v = v * Phi;
    }
    rhs(i) = targets[i] - v * s0;
  }
  const Eigen::MatrixXd AAt = A * A.transpose();
  const Eigen::VectorXd lambda = AAt.ldlt().solve(rhs);
  const Eigen::VectorXd u = A.transpose() * lambda;

  SnapOracleResult out;
  out.objective = h * u.squaredNorm();
  Eigen::Vector4d s = s0;
  out.positions.push_back(s(0));
  for (int k = 0; k < n; ++k) {
    s = Phi * s + B * u(k);
    out.positions.push_back(s(0));
  }
  return out;
}

// Composite Simpson rule on [a, b] with an even number of intervals.
template <class F>
double simpson(F&& f, double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  double acc = f(a) + f(b);
  for (int k = 1; k < intervals; ++k) acc += (k % 2 == 1 ? 4.0 : 2.0) * f(a + k * h);
  return acc * h / 3.0;
}

// Exact GP classifier predictive probabilities by dense quadrature over the
// latent values at the training points (feasible for n <= 4). The latent
// vector is whitened, f = L u, and integrated on a tensor midpoint grid over
// [-span, span]^n; given f the test latent is Gaussian, so the inner integral
// is the closed-form probit-Gaussian one. Kernel: squared exponential with
// per-dimension length scales.
struct GpcOracleInput {
  Eigen::MatrixXd X;
  Eigen::VectorXi y;
  Eigen::VectorXd lengthscale;
  double signal_sd = 1.0;
  double jitter = 1e-6;
};

inline std::vector<double> quadrature_gpc(const GpcOracleInput& in, const Eigen::MatrixXd& tests, int grid = 61,
                                          double span = 7.0) {
  auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  auto k = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double r2 = 0.0;
    for (Eigen::Index d = 0; d < a.size(); ++d) r2 += std::pow((a(d) - b(d)) / in.lengthscale(d), 2);
    return in.signal_sd * in.signal_sd * std::exp(-0.5 * r2);
  };
  const int n = static_cast<int>(in.X.rows());
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) K(i, j) = k(in.X.row(i).transpose(), in.X.row(j).transpose()) + (i == j ? in.jitter : 0.0);
  const Eigen::MatrixXd L = K.llt().matrixL();

  // Enumerate the grid once: weights and whitened coordinates.
  long total = 1;
  for (int i = 0; i < n; ++i) total *= grid;
  const double h = 2.0 * span / grid;
  std::vector<double> weight(static_cast<std::size_t>(total));
  Eigen::MatrixXd U(n, total);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (long c = 0; c < total; ++c) {
    long rem = c;
    for (int i = 0; i < n; ++i) {
      idx[static_cast<std::size_t>(i)] = static_cast<int>(rem % grid);
      rem /= grid;
      U(i, c) = -span + (idx[static_cast<std::size_t>(i)] + 0.5) * h;
    }
    const Eigen::VectorXd f = L * U.col(c);
    double w = std::exp(-0.5 * U.col(c).squaredNorm());
    for (int i = 0; i < n; ++i) w *= cdf(in.y(i) ? f(i) : -f(i));
    weight[static_cast<std::size_t>(c)] = w;
  }
  double norm = 0.0;
  for (double w : weight) norm += w;

  std::vector<double> out;
  for (Eigen::Index t = 0; t < tests.rows(); ++t) {
    Eigen::VectorXd ks(n);
    for (int i = 0; i < n; ++i) ks(i) = k(in.X.row(i).transpose(), tests.row(t).transpose());
    const Eigen::VectorXd c = L.triangularView<Eigen::Lower>().solve(ks);
    const double s2 = std::max(in.signal_sd * in.signal_sd - c.squaredNorm(), 0.0);
    const double scale = 1.0 / std::sqrt(1.0 + s2);
    double acc = 0.0;
    for (long g = 0; g < total; ++g) {
      const double w = weight[static_cast<std::size_t>(g)];
      if (w == 0.0) continue;
      acc += w * cdf(c.dot(U.col(g)) * scale);
    }
    out.push_back(acc / norm);
  }
  return out;
}

// Same predictive probabilities by elliptical slice sampling of the exact
// latent posterior; usable for tens of training points. Monte Carlo error of
// the returned values is roughly 0.5 / sqrt(samples / 10).
inline std::vector<double> sampled_gpc(const GpcOracleInput& in, const Eigen::MatrixXd& tests, int samples = 40000,
                                       std::uint64_t seed = 1) {
  auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  auto k = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double r2 = 0.0;
    for (Eigen::Index d = 0; d < a.size(); ++d) r2 += std::pow((a(d) - b(d)) / in.lengthscale(d), 2);
    return in.signal_sd * in.signal_sd * std::exp(-0.5 * r2);
  };
  const int n = static_cast<int>(in.X.rows());
  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) K(i, j) = k(in.X.row(i).transpose(), in.X.row(j).transpose()) + (i == j ? in.jitter : 0.0);
  const Eigen::MatrixXd L = K.llt().matrixL();
  auto loglik = [&](const Eigen::VectorXd& u) {
    const Eigen::VectorXd f = L * u;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::log(std::max(cdf(in.y(i) ? f(i) : -f(i)), 1e-300));
    return s;
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  double ll = loglik(u);
  const int burn = 2000, thin = 5;
  Eigen::MatrixXd kept(n, samples);
  for (int it = 0, saved = 0; saved < samples; ++it) {
    Eigen::VectorXd nu(n);
    for (int i = 0; i < n; ++i) nu(i) = normal(rng);
    const double threshold = ll + std::log(unit(rng));
    double theta = 2.0 * 3.141592653589793 * unit(rng);
    double lo = theta - 2.0 * 3.141592653589793, hi = theta;
    while (true) {
      const Eigen::VectorXd cand = u * std::cos(theta) + nu * std::sin(theta);
      const double lc = loglik(cand);
      if (lc > threshold) {
        u = cand;
        ll = lc;
        break;
      }
      (theta < 0 ? lo : hi) = theta;
      theta = lo + (hi - lo) * unit(rng);
    }
    if (it >= burn && it % thin == 0) kept.col(saved++) = u;
  }

  std::vector<double> out;
  for (Eigen::Index t = 0; t < tests.rows(); ++t) {
    Eigen::VectorXd ks(n);
    for (int i = 0; i < n; ++i) ks(i) = k(in.X.row(i).transpose(), tests.row(t).transpose());
    const Eigen::VectorXd c = L.triangularView<Eigen::Lower>().solve(ks);
    const double s2 = std::max(in.signal_sd * in.signal_sd - c.squaredNorm(), 0.0);
    const Eigen::VectorXd means = kept.transpose() * c;
    double acc = 0.0;
    for (int sidx = 0; sidx < samples; ++sidx) acc += cdf(means(sidx) / std::sqrt(1.0 + s2));
    out.push_back(acc / samples);
  }
  return out;
}

}  // namespace swarmopt::testing
