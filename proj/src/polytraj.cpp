#include "swarmopt/polytraj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "swarmopt/errors.hpp"
#include "swarmopt/spline_qp.hpp"

namespace swarmopt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double face_bound(const Polytope& poly, int face, const CorridorProblem& problem, double t) {
  double bound = poly.b(face);
  if (poly.obstacle_mask(face) == 0) return bound;
  if (problem.margin) bound -= problem.margin(t);
  if (problem.face_margin) bound -= problem.face_margin(t, poly.A.row(face).transpose());
  return bound;
}

void add_corridor_rows(SplineQp& qp, const CorridorProblem& problem, const std::vector<double>& knots,
                       const std::vector<double>& durations, int segment, double s) {
  const Polytope& poly = problem.corridor[segment];
  const double t = knots[segment] + s * durations[segment];
  for (int f = 0; f < poly.faces(); ++f) {
    qp.add_inequality(segment, s, poly.A.row(f).transpose(), face_bound(poly, f, problem, t));
  }
}

double segment_violation(const PiecewisePolynomial& poly, const CorridorProblem& problem, int j, double s) {
  const Polytope& P = problem.corridor[j];
  const Vec3 p(poly.derivative(j, s, 0, 0), poly.derivative(j, s, 1, 0), poly.derivative(j, s, 2, 0));
  const double t = poly.knots()[j] + s * poly.durations()[j];
  double worst = -kInf;
  for (int f = 0; f < P.faces(); ++f) worst = std::max(worst, P.A.row(f).dot(p) - face_bound(P, f, problem, t));
  return worst;
}

}  // namespace

PiecewiseTrajectory::PiecewiseTrajectory(PiecewisePolynomial poly) : poly_(std::move(poly)) {
  if (poly_.channels() != 4) throw DimensionError("PiecewiseTrajectory: expected channels x, y, z, yaw");
}

FlatOutput PiecewiseTrajectory::sample(double t) const {
  FlatOutput out;
  const Eigen::VectorXd p = poly_.evaluate(t, 0);
  out.position = p.head<3>();
  out.yaw = p(3);
  if (t < 0.0 || t > poly_.duration()) return out;
  const int j = poly_.locate(t);
  const double s = std::clamp((t - poly_.knots()[j]) / poly_.durations()[j], 0.0, 1.0);
  Vec3* slots[] = {&out.velocity, &out.acceleration, &out.jerk, &out.snap};
  for (int r = 1; r <= 4; ++r) {
    for (int c = 0; c < 3; ++c) (*slots[r - 1])(c) = poly_.derivative(j, s, c, r);
  }
  out.yaw_rate = poly_.derivative(j, s, 3, 1);
  out.yaw_acceleration = poly_.derivative(j, s, 3, 2);
  return out;
}

Vec3 PiecewiseTrajectory::position(double t) const {
  return poly_.evaluate(t, 0).head<3>();
}

CorridorProblem vehicle_problem(const Environment& env, int vehicle) {
  if (vehicle < 0 || vehicle >= env.vehicles) throw DimensionError("vehicle index out of range");
  CorridorProblem p;
  p.corridor = env.corridors[vehicle];
  p.start = env.starts[vehicle];
  p.end = env.ends[vehicle];
  p.waypoint_segments = env.formation.segment_ends;
  p.waypoints = env.formation.waypoints[vehicle];
  return p;
}

std::vector<double> lobatto_points(int count) {
  std::vector<double> s(count);
  if (count == 1) {
    s[0] = 0.5;
    return s;
  }
  for (int k = 0; k < count; ++k) {
    s[k] = 0.5 * (1.0 - std::cos(std::numbers::pi * k / (count - 1)));
  }
  return s;
}

double unwrap_near(double angle, double reference) {
  const double two_pi = 2.0 * std::numbers::pi;
  return angle - two_pi * std::round((angle - reference) / two_pi);
}

PiecewiseTrajectory min_snap(const std::vector<double>& durations, const CorridorProblem& problem,
                             const SnapWeights& weights, const SnapOptions& options) {
  const int m = problem.segments();
  if (static_cast<int>(durations.size()) != m) throw DimensionError("min_snap: one duration per corridor polytope");
  if (!(weights.position > 0.0)) throw ValidationError("min_snap: position weight must be positive");
  if (problem.waypoints.size() != problem.waypoint_segments.size()) {
    throw DimensionError("min_snap: one waypoint per formation segment index");
  }
  std::vector<double> knots(1, 0.0);
  for (double x : durations) knots.push_back(knots.back() + x);

  SplineQp pos(3, durations);
  for (int c = 0; c < 3; ++c) {
    pos.add_cost(c, 4, 1.0);
    pos.add_continuity(c, 4);
    pos.fix(c, 0, 0.0, 0, problem.start.position(c));
    pos.fix(c, m - 1, 1.0, 0, problem.end.position(c));
    for (int r = 1; r <= 3; ++r) {
      pos.fix(c, 0, 0.0, r, 0.0);
      pos.fix(c, m - 1, 1.0, r, 0.0);
    }
    for (std::size_t k = 0; k < problem.waypoints.size(); ++k) {
      pos.fix(c, problem.waypoint_segments[k] - 1, 1.0, 0, problem.waypoints[k].position(c));
    }
  }
  const std::vector<double> colloc = lobatto_points(options.collocation);
  for (int j = 0; j < m; ++j) {
    for (double s : colloc) add_corridor_rows(pos, problem, knots, durations, j, s);
  }

  const int grid = std::max(1, options.collocation * options.verify_density);
  PiecewisePolynomial position;
  for (int round = 0;; ++round) {
    position = pos.solve(options.regularization);
    double worst = -kInf;
    int added = 0;
    for (int j = 0; j < m; ++j) {
      std::vector<std::pair<double, double>> violated;
      for (int k = 0; k <= grid; ++k) {
        const double s = static_cast<double>(k) / grid;
        const double v = segment_violation(position, problem, j, s);
        worst = std::max(worst, v);
        if (v > 0.25 * options.corridor_tolerance) violated.emplace_back(v, s);
      }
      std::sort(violated.begin(), violated.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      for (std::size_t k = 0; k < violated.size() && k < 8; ++k) {
        add_corridor_rows(pos, problem, knots, durations, j, violated[k].second);
        ++added;
      }
    }
    if (worst <= options.corridor_tolerance) break;
    if (round >= options.refine_rounds || added == 0) {
      throw InfeasibleError("min_snap: corridor refinement did not converge");
    }
  }

  SplineQp yaw(1, durations);
  yaw.add_cost(0, 2, 1.0);
  yaw.add_continuity(0, 2);
  double previous = problem.start.yaw;
  yaw.fix(0, 0, 0.0, 0, previous);
  for (std::size_t k = 0; k < problem.waypoints.size(); ++k) {
    previous = unwrap_near(problem.waypoints[k].yaw, previous);
    yaw.fix(0, problem.waypoint_segments[k] - 1, 1.0, 0, previous);
  }
  yaw.fix(0, m - 1, 1.0, 0, unwrap_near(problem.end.yaw, previous));
  for (int r = 1; r <= 2; ++r) {
    yaw.fix(0, 0, 0.0, r, 0.0);
    yaw.fix(0, m - 1, 1.0, r, 0.0);
  }
  const PiecewisePolynomial heading = yaw.solve(options.regularization);

  std::vector<Eigen::MatrixXd> coeffs;
  for (int j = 0; j < m; ++j) {
    Eigen::MatrixXd c(kCoeffs, 4);
    c.leftCols(3) = position.coeffs(j);
    c.col(3) = heading.coeffs(j).col(0);
    coeffs.push_back(std::move(c));
  }
  return PiecewiseTrajectory(PiecewisePolynomial(durations, std::move(coeffs)));
}

double snap_cost(const PiecewisePolynomial& poly, int first_channel, int channel_count) {
  static const Eigen::MatrixXd G = derivative_gram(4);
  double total = 0.0;
  for (int j = 0; j < poly.segments(); ++j) {
    double seg = 0.0;
    for (int c = first_channel; c < first_channel + channel_count; ++c) {
      const Eigen::VectorXd coef = poly.coeffs(j).col(c);
      seg += coef.dot(G * coef);
    }
    total += seg * std::pow(poly.durations()[j], -7);
  }
  return total;
}

double objective_sigma(const PiecewiseTrajectory& trajectory, const SnapWeights& weights) {
  static const Eigen::MatrixXd G2 = derivative_gram(2);
  const PiecewisePolynomial& poly = trajectory.polynomial();
  double yaw = 0.0;
  for (int j = 0; j < poly.segments(); ++j) {
    const Eigen::VectorXd coef = poly.coeffs(j).col(3);
    yaw += coef.dot(G2 * coef) * std::pow(poly.durations()[j], -3);
  }
  return weights.position * snap_cost(poly, 0, 3) + weights.yaw * yaw;
}

double corridor_violation(const PiecewiseTrajectory& trajectory, const CorridorProblem& problem,
                          int samples_per_segment) {
  const PiecewisePolynomial& poly = trajectory.polynomial();
  if (poly.segments() != problem.segments()) throw DimensionError("corridor_violation: segment count mismatch");
  double worst = -kInf;
  for (int j = 0; j < poly.segments(); ++j) {
    for (int k = 0; k <= samples_per_segment; ++k) {
      worst = std::max(worst, segment_violation(poly, problem, j, static_cast<double>(k) / samples_per_segment));
    }
  }
  return worst;
}

std::vector<double> minimize_on_simplex(const std::function<double(const std::vector<double>&)>& cost,
                                        std::vector<double> x, int max_sweeps, double rel_tol) {
  const int m = static_cast<int>(x.size());
  if (m <= 1) return x;
  const double total = std::accumulate(x.begin(), x.end(), 0.0);

  auto moved = [&](const std::vector<double>& base, int j, double value) {
    std::vector<double> y = base;
    const double rest = total - base[j];
    const double factor = (total - value) / rest;
    for (int i = 0; i < m; ++i) y[i] = i == j ? value : base[i] * factor;
    return y;
  };

  double f = cost(x);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const double f_start = f;
    for (int j = 0; j < m; ++j) {
      double lo = std::log(0.5 * x[j]);
      double hi = std::log(std::min(2.0 * x[j], total - 1e-3 * (total - x[j])));
      if (!(hi > lo)) continue;
      auto eval = [&](double u) { return cost(moved(x, j, std::exp(u))); };
      double a = hi - phi * (hi - lo);
      double b = lo + phi * (hi - lo);
      double fa = eval(a);
      double fb = eval(b);
      double best_u = std::log(x[j]);
      double best_f = f;
      for (int it = 0; it < 24; ++it) {
        if (fa < best_f) {
          best_f = fa;
          best_u = a;
        }
        if (fb < best_f) {
          best_f = fb;
          best_u = b;
        }
        if (fa <= fb) {
          hi = b;
          b = a;
          fb = fa;
          a = hi - phi * (hi - lo);
          fa = eval(a);
        } else {
          lo = a;
          a = b;
          fa = fb;
          b = lo + phi * (hi - lo);
          fb = eval(b);
        }
      }
      if (fa < best_f) {
        best_f = fa;
        best_u = a;
      }
      if (fb < best_f) {
        best_f = fb;
        best_u = b;
      }
      if (best_f < f) {
        x = moved(x, j, std::exp(best_u));
        f = best_f;
      }
    }
    if (std::isfinite(f_start) && std::abs(f_start - f) <= rel_tol * std::abs(f_start)) break;
  }
  return x;
}

std::vector<double> initial_allocation(const CorridorProblem& problem, const SnapWeights& weights,
                                       const SnapOptions& options, double seconds_per_segment) {
  const int m = problem.segments();
  std::vector<double> start(m, seconds_per_segment);
  auto cost = [&](const std::vector<double>& x) {
    try {
      return objective_sigma(min_snap(x, problem, weights, options), weights);
    } catch (const InfeasibleError&) {
      return kInf;
    } catch (const ConditioningError&) {
      return kInf;
    }
  };
  return minimize_on_simplex(cost, start);
}

std::vector<double> initial_allocation(const Environment& env, int vehicle, const SnapWeights& weights,
                                       const SnapOptions& options) {
  return initial_allocation(vehicle_problem(env, vehicle), weights, options);
}

ScaleResult scale_to_feasible(const std::vector<double>& durations,
                              const std::function<bool(const std::vector<double>&)>& oracle, double eta_lo,
                              double eta_hi, double tol) {
  auto scaled = [&](double eta) {
    std::vector<double> y = durations;
    for (double& v : y) v *= eta;
    return y;
  };
  if (!oracle(scaled(eta_hi))) {
    throw NoFeasibleScaleError("no feasible time scale up to eta = " + std::to_string(eta_hi));
  }
  if (oracle(scaled(eta_lo))) return ScaleResult{eta_lo, scaled(eta_lo)};
  double lo = eta_lo;
  double hi = eta_hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (oracle(scaled(mid))) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return ScaleResult{hi, scaled(hi)};
}

}  // namespace swarmopt
