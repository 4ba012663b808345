#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "trajectories.hpp"
#include "swarmopt/collision.hpp"
#include "swarmopt/geometry.hpp"
#include "swarmopt/polytraj.hpp"

using namespace swarmopt;
using testing::Gen;

namespace {

testing::Analytic line(const Vec3& a, const Vec3& b, double duration) {
  return testing::Analytic(duration, [=](double t) {
    FlatOutput f;
    const double u = std::clamp(t / duration, 0.0, 1.0);
    f.position = a + u * (b - a);
    return f;
  });
}

// Independent brute-force minimum over an arbitrary time grid.
template <class A, class B>
double brute_min(const A& a, const B& b, double dt) {
  const double horizon = std::max(a.duration(), b.duration());
  double best = std::numeric_limits<double>::infinity();
  for (double t = 0.0; t <= horizon + 1e-12; t += dt) best = std::min(best, (a.position(t) - b.position(t)).norm());
  return std::min(best, (a.position(horizon) - b.position(horizon)).norm());
}

}  // namespace

TEST_CASE("hovering vehicles one meter apart") {
  const auto a = testing::hover(Vec3(0, 0, 1), 3.0);
  const auto b = testing::hover(Vec3(1, 0, 1), 2.0);
  CHECK(min_separation(a, b).distance == doctest::Approx(1.0));
}

TEST_CASE("synchronized crossing lines meet at the crossing time") {
  const auto a = line(Vec3(-1, 0, 1), Vec3(1, 0, 1), 2.0);
  const auto b = line(Vec3(0, -1, 1), Vec3(0, 1, 1), 2.0);
  const Separation s = min_separation(a, b);
  CHECK(s.distance < 1e-12);
  CHECK(s.time == doctest::Approx(1.0));
}

TEST_CASE("check_pair threshold") {
  const auto a = testing::hover(Vec3(0, 0, 1), 1.0);
  CHECK(check_pair(a, testing::hover(Vec3(0.41, 0, 1), 1.0), 0.40));
  CHECK_FALSE(check_pair(a, testing::hover(Vec3(0.39, 0, 1), 1.0), 0.40));
}

TEST_CASE("paths hold their final position after they end") {
  const auto a = line(Vec3(0, 0, 0), Vec3(1, 0, 0), 1.0);
  const auto b = testing::hover(Vec3(1, 0.5, 0), 3.0);
  const Separation s = min_separation(a, b);
  CHECK(s.distance == doctest::Approx(0.5));
  CHECK(s.time >= 1.0 - 1e-12);
}

TEST_CASE("fixture corridor trajectories agree with a finer grid") {
  const Environment env = load_environment(testing::data_path("envs/toy2.json"));
  const PiecewiseTrajectory a = min_snap({1.3, 1.1, 1.0}, vehicle_problem(env, 0));
  const PiecewiseTrajectory b = min_snap({1.0, 1.4, 1.0}, vehicle_problem(env, 1));
  const double coarse = min_separation(a, b).distance;
  const double fine = brute_min(a, b, kSeparationStep / 10.0);
  CHECK(std::abs(coarse - fine) <= 1e-3);
}

TEST_CASE("random pairs: labels, symmetry, translation, refinement") {
  Gen gen(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = line(gen.vector(3, -2, 2), gen.vector(3, -2, 2), gen.uniform(0.5, 3.0));
    const auto b = line(gen.vector(3, -2, 2), gen.vector(3, -2, 2), gen.uniform(0.5, 3.0));
    const double d_min = gen.uniform(0.1, 1.5);
    const double d = min_separation(a, b).distance;
    CHECK(check_pair(a, b, d_min) == (brute_min(a, b, kSeparationStep) >= d_min));
    CHECK(check_pair(a, b, d_min) == check_pair(b, a, d_min));

    const Vec3 shift = gen.vector(3, -10, 10);
    const testing::Analytic as(a.duration(), [&](double t) {
      FlatOutput f = a.sample(t);
      f.position += shift;
      return f;
    });
    const testing::Analytic bs(b.duration(), [&](double t) {
      FlatOutput f = b.sample(t);
      f.position += shift;
      return f;
    });
    CHECK(std::abs(min_separation(as, bs).distance - d) <= 1e-12);
    CHECK(min_separation(a, b, kSeparationStep / 2).distance <= d + 1e-9);
  }
}

TEST_CASE("SampledPath interpolates and holds") {
  const SampledPath p(0.5, {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 2, 0)});
  CHECK(p.duration() == doctest::Approx(1.0));
  CHECK((p.position(0.25) - Vec3(0.5, 0, 0)).norm() < 1e-12);
  CHECK((p.position(0.75) - Vec3(1, 1, 0)).norm() < 1e-12);
  CHECK((p.position(5.0) - Vec3(1, 2, 0)).norm() < 1e-12);
  CHECK((p.position(-1.0) - Vec3(0, 0, 0)).norm() < 1e-12);
}
