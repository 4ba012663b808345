#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "support.hpp"
#include "swarmopt/baseline.hpp"
#include "swarmopt/collision.hpp"
#include "swarmopt/errors.hpp"
#include "swarmopt/flatness.hpp"

using namespace swarmopt;
using testing::Gen;

namespace {

FormationSchedule schedule(std::vector<int> ends, std::vector<double> bounds, std::vector<double> yaw = {}) {
  FormationSchedule s;
  s.segment_ends = std::move(ends);
  s.scale_bounds = std::move(bounds);
  s.yaw_refs = yaw.empty() ? std::vector<double>(s.scale_bounds.size(), 0.0) : std::move(yaw);
  return s;
}

double scalar(const PiecewisePolynomial& p, double t, int order = 0) { return p.evaluate(t, order)(0); }

// Boundary times of the formation intervals.
std::vector<double> boundary_times(const std::vector<int>& ends, const std::vector<double>& x) {
  std::vector<double> out{0.0};
  for (int e : ends) out.push_back(std::accumulate(x.begin(), x.begin() + e, 0.0));
  out.push_back(std::accumulate(x.begin(), x.end(), 0.0));
  return out;
}

}  // namespace

TEST_CASE("scale profile: equal bounds give a constant") {
  const std::vector<double> x{0.7, 1.1, 0.4};
  double objective = -1.0;
  const PiecewisePolynomial b = formation_scale_profile(schedule({1}, {0.8, 0.8, 0.8}), x, {}, &objective);
  CHECK(objective == doctest::Approx(0.0).epsilon(1e-9));
  for (double t = 0.0; t <= 2.2; t += 0.05) {
    CHECK(scalar(b, t) == doctest::Approx(0.8).epsilon(1e-5));
    CHECK(std::abs(scalar(b, t, 1)) < 1e-4);
  }
}

TEST_CASE("scale profile: waypoint values and the interval cap on random schedules") {
  Gen gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = gen.integer(2, 5);
    std::vector<double> x;
    for (int j = 0; j < m; ++j) x.push_back(gen.uniform(0.3, 2.0));
    const int e = gen.integer(1, m - 1);
    const std::vector<double> bounds{gen.uniform(0.3, 2.0), gen.uniform(0.3, 2.0), gen.uniform(0.3, 2.0)};
    const SnapOptions opts;
    const PiecewisePolynomial b = formation_scale_profile(schedule({e}, bounds), x, opts);
    const auto times = boundary_times({e}, x);
    for (std::size_t k = 0; k < times.size(); ++k) CHECK(scalar(b, times[k]) == doctest::Approx(bounds[k]).epsilon(1e-7));
    const auto colloc = lobatto_points(opts.collocation);
    double t0 = 0.0;
    for (int j = 0; j < m; ++j) {
      const double cap = j < e ? std::max(bounds[0], bounds[1]) : std::max(bounds[1], bounds[2]);
      for (double s : colloc) CHECK(scalar(b, t0 + s * x[j]) <= cap + 1e-7);
      t0 += x[j];
    }
    // C^3 at the knots
    t0 = 0.0;
    for (int j = 0; j + 1 < m; ++j) {
      t0 += x[j];
      for (int r = 0; r < 4; ++r)
        CHECK(scalar(b, t0 - 1e-9, r) == doctest::Approx(scalar(b, t0 + 1e-9, r)).epsilon(1e-4).scale(1.0));
    }
  }
}

TEST_CASE("scale profile agrees with a dense discretization when the cap is inactive") {
  // Rest-to-rest with a dip in the middle; the oracle's own optimum stays
  // under the cap, so the profile must be the minimum-snap interpolant.
  const std::vector<double> x{0.8, 1.2};
  const std::vector<double> bounds{1.0, 0.6, 1.0};
  const auto oracle = testing::discretized_min_snap(1.0, 1.0, 2.0, 1e-3, {{0.8, 0.6}});
  REQUIRE(*std::max_element(oracle.positions.begin(), oracle.positions.end()) <= 1.0 + 1e-9);
  double objective = 0.0;
  const PiecewisePolynomial b = formation_scale_profile(schedule({1}, bounds), x, {}, &objective);
  CHECK(objective == doctest::Approx(oracle.objective).epsilon(1e-4));
  for (std::size_t k = 0; k < oracle.positions.size(); k += 50)
    CHECK(scalar(b, k * 1e-3) == doctest::Approx(oracle.positions[k]).epsilon(1e-4));
}

TEST_CASE("scale profile: alternating bounds stay under the cap") {
  const std::vector<double> x{1.0, 1.0};
  const SnapOptions opts;
  const PiecewisePolynomial b = formation_scale_profile(schedule({1}, {1.0, 0.5, 1.0}), x, opts);
  CHECK(scalar(b, 1.0) == doctest::Approx(0.5).epsilon(1e-7));
  for (int j = 0; j < 2; ++j)
    for (double s : lobatto_points(opts.collocation)) CHECK(scalar(b, j + s) <= 1.0 + 1e-7);
  for (int r = 1; r <= 3; ++r) {
    CHECK(std::abs(scalar(b, 0.0, r)) < 1e-6);
    CHECK(std::abs(scalar(b, 2.0, r)) < 1e-6);
  }
}

TEST_CASE("yaw profile passes the unwrapped references and is at rest at the ends") {
  Gen gen(5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<double> x{gen.uniform(0.5, 2.0), gen.uniform(0.5, 2.0), gen.uniform(0.5, 2.0)};
    const std::vector<double> refs{gen.uniform(-M_PI, M_PI), gen.uniform(-M_PI, M_PI), gen.uniform(-M_PI, M_PI)};
    const PiecewisePolynomial psi = formation_yaw_profile(schedule({2}, {1, 1, 1}, refs), x);
    const auto times = boundary_times({2}, x);
    double previous = refs[0];
    for (std::size_t k = 0; k < refs.size(); ++k) {
      const double v = scalar(psi, times[k]);
      CHECK(std::abs(v - previous) <= M_PI + 1e-9);
      CHECK(std::abs(std::remainder(v - refs[k], 2.0 * M_PI)) < 1e-6);
      previous = v;
    }
    for (int r = 1; r <= 3; ++r) {
      CHECK(std::abs(scalar(psi, 0.0, r)) < 1e-6);
      CHECK(std::abs(scalar(psi, times.back(), r)) < 1e-6);
    }
  }
}

TEST_CASE("footprint support of a polygon") {
  const std::vector<Vec3> square{{1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}};
  CHECK(footprint_support(square, 1.0, 1.0, 0.0, Vec3(1, 0, 0)) == doctest::Approx(1.0));
  CHECK(footprint_support(square, 0.5, 1.0, 0.0, Vec3(1, 0, 0)) == doctest::Approx(0.5));
  CHECK(footprint_support(square, 1.0, 1.0, M_PI / 4, Vec3(1, 0, 0)) == doctest::Approx(std::sqrt(0.5)));
  CHECK(footprint_support(square, 1.0, 1.0, 0.0, Vec3(0, 0, 1)) == doctest::Approx(0.0));
  CHECK(footprint_support({{1, 0, 0}}, 1.0, 1.0, 0.0, Vec3(-1, 0, 0)) == 0.0);
}

TEST_CASE("zero scale gives the untightened center trajectory") {
  const Environment env = load_environment(testing::data_path("envs/toy2.json"));
  const std::vector<double> x{1.5, 1.5, 1.5};
  const PiecewisePolynomial zero({1.5, 1.5, 1.5}, std::vector<Eigen::MatrixXd>(3, Eigen::MatrixXd::Zero(kCoeffs, 1)));
  const PiecewisePolynomial psi = formation_yaw_profile(env.formation, x);
  const auto center = formation_center_trajectory(env, x, zero, psi, formation_offsets(env));
  const auto plain = min_snap(x, formation_center_problem(env));
  for (double t = 0.0; t <= 4.5; t += 0.1) CHECK((center.position(t) - plain.position(t)).norm() < 1e-6);
}

TEST_CASE("member trajectory derivatives match finite differences") {
  const Environment env = load_environment(testing::data_path("envs/toy2.json"));
  const std::vector<double> x{1.2, 0.9, 1.4};
  const PiecewisePolynomial b = formation_scale_profile(schedule({2}, {1.0, 0.6, 1.0}), x);
  const PiecewisePolynomial psi = formation_yaw_profile(env.formation, x);
  const auto offsets = formation_offsets(env);
  const auto center = min_snap(x, formation_center_problem(env));
  const FormationMemberTrajectory member(center, b, psi, offsets[0], 1.0);
  const double h = 1e-4;
  for (double t : {0.3, 1.0, 1.7, 2.5, 3.2}) {
    auto der = [&](double s, int order) {
      const FlatOutput f = member.sample(s);
      return order == 0 ? f.position : order == 1 ? f.velocity : order == 2 ? f.acceleration : f.jerk;
    };
    for (int order = 0; order < 4; ++order) {
      const Vec3 fd = (der(t + h, order) - der(t - h, order)) / (2 * h);
      const FlatOutput f = member.sample(t);
      const Vec3 next = order == 0 ? f.velocity : order == 1 ? f.acceleration : order == 2 ? f.jerk : f.snap;
      CHECK((fd - next).norm() < 1e-4 * (1.0 + next.norm()));
    }
    CHECK((member.position(t) - member.sample(t).position).norm() < 1e-12);
    CHECK(member.sample(t).yaw == doctest::Approx(scalar(psi, t)));
  }
}

TEST_CASE("member separation is the scaled offset distance") {
  const Environment env = load_environment(testing::data_path("envs/four_vehicle.json"));
  const int m = env.segments();
  const std::vector<double> x(static_cast<std::size_t>(m), 1.0);
  const PiecewisePolynomial b = formation_scale_profile(env.formation, x);
  const PiecewisePolynomial psi = formation_yaw_profile(env.formation, x);
  const auto offsets = formation_offsets(env);
  const double B = *std::max_element(env.formation.scale_bounds.begin(), env.formation.scale_bounds.end());
  const auto center = min_snap(x, formation_center_problem(env));
  for (std::size_t i = 0; i < offsets.size(); ++i)
    for (std::size_t j = i + 1; j < offsets.size(); ++j) {
      const FormationMemberTrajectory a(center, b, psi, offsets[i], B), c(center, b, psi, offsets[j], B);
      for (double t = 0.0; t <= m; t += 0.125)
        CHECK((a.position(t) - c.position(t)).norm() ==
              doctest::Approx(scalar(b, t) / B * (offsets[i] - offsets[j]).norm()).epsilon(1e-9));
    }
}

TEST_CASE("offsets reproduce the start poses of a symmetric environment") {
  const Environment env = load_environment(testing::data_path("envs/toy2.json"));
  const auto offsets = formation_offsets(env);
  REQUIRE(offsets.size() == 2);
  const Vec3 centroid = (env.starts[0].position + env.starts[1].position) / 2;
  for (int i = 0; i < 2; ++i) CHECK((centroid + offsets[i] - env.starts[i].position).norm() < 1e-9);
}

TEST_CASE("baseline on the two-vehicle toy is feasible and keeps the formation apart") {
  const Environment env = load_environment(testing::data_path("envs/toy2.json"));
  const BaselineResult r = formation_baseline(env);
  REQUIRE(r.vehicles.size() == 2);
  CHECK(r.makespan == doctest::Approx(std::accumulate(r.center_durations.begin(), r.center_durations.end(), 0.0)));
  for (const auto& v : r.vehicles) CHECK(check_feasible_low(v, env.quad, 0.01).feasible);
  CHECK(min_separation(r.vehicles[0], r.vehicles[1]).distance >= env.d_min - 1e-9);
  // Every member ends where its formation puts it and stays off the obstacle faces.
  for (int i = 0; i < 2; ++i) {
    CHECK((r.vehicles[i].position(r.makespan) - env.ends[i].position).norm() < 1e-6);
    double t0 = 0.0;
    for (int j = 0; j < env.segments(); ++j) {
      const Polytope& poly = env.corridors[i][j];
      for (int k = 0; k <= 50; ++k) {
        const Vec3 p = r.vehicles[i].position(t0 + r.center_durations[j] * k / 50.0);
        for (int f = 0; f < poly.A.rows(); ++f)
          if (poly.obstacle_mask(f)) CHECK(poly.A.row(f).dot(p) - poly.b(f) < 1e-3);
      }
      t0 += r.center_durations[j];
    }
  }
}

TEST_CASE("baseline rejects a formation wider than the corridor") {
  Environment env = load_environment(testing::data_path("envs/toy2.json"));
  env.formation.scale_bounds = {5.0, 5.0, 5.0};
  CHECK_THROWS_AS(formation_baseline(env), InfeasibleError);
}
