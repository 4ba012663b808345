#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support.hpp"
#include "swarmopt/errors.hpp"
#include "swarmopt/geometry.hpp"

using namespace swarmopt;
using testing::Gen;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

bool raw_inside(const nlohmann::json& poly, const std::vector<double>& r) {
  for (std::size_t f = 0; f < poly["b"].size(); ++f) {
    double lhs = 0.0;
    for (int c = 0; c < 3; ++c) lhs += poly["A"][f][c].get<double>() * r[c];
    if (lhs > poly["b"][f].get<double>() + 1e-9) return false;
  }
  return true;
}

const char* kMinimal = R"({
  "vehicles": 1,
  "corridors": [[{"A": [[1,0,0],[-1,0,0],[0,1,0],[0,-1,0],[0,0,1],[0,0,-1]], "b": [1,1,1,1,2,0]}]],
  "starts": [[0,0,1,0]],
  "ends": [[0.5,0,1,0]]
})";

}  // namespace

TEST_CASE("interior_point: unit cube has its Chebyshev center at the origin") {
  const InteriorPoint ip = interior_point(Polytope::box(Vec3(-0.5, -0.5, -0.5), Vec3(0.5, 0.5, 0.5)));
  CHECK(ip.center.norm() < 1e-9);
  CHECK(ip.radius == doctest::Approx(0.5));
}

TEST_CASE("interior_point: unbounded and empty inputs are rejected") {
  Eigen::Matrix<double, Eigen::Dynamic, 3> A(1, 3);
  A << 0, 0, 1;
  CHECK_THROWS_AS(interior_point(Polytope::from_halfspaces(A, Eigen::VectorXd::Ones(1))), ValidationError);
  const Polytope empty = intersect(Polytope::box(Vec3(0, 0, 0), Vec3(1, 1, 1)), Polytope::box(Vec3(2, 2, 2), Vec3(3, 3, 3)));
  CHECK_THROWS_AS(interior_point(empty), ValidationError);
  CHECK_FALSE(is_bounded(Polytope::from_halfspaces(A, Eigen::VectorXd::Ones(1))));
}

TEST_CASE("interior_point: random 8-face polytopes, checked by substitution") {
  Gen gen(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 center = gen.vector(3, -5, 5);
    Eigen::Matrix<double, Eigen::Dynamic, 3> A(8, 3);
    Eigen::VectorXd b(8);
    for (int f = 0; f < 8; ++f) {
      const Vec3 n = gen.unit3() * gen.uniform(0.5, 3.0);
      A.row(f) = n.transpose();
      b(f) = n.dot(center) + gen.uniform(0.1, 2.0);
    }
    const Polytope P = Polytope::from_halfspaces(A, b);
    if (!is_bounded(P)) continue;
    const InteriorPoint ip = interior_point(P);
    CHECK((A * ip.center - b).maxCoeff() <= -1e-9);
  }
}

TEST_CASE("row normalization preserves the feasible set") {
  Gen gen(2);
  Eigen::Matrix<double, Eigen::Dynamic, 3> A(7, 3);
  Eigen::VectorXd b(7);
  for (int f = 0; f < 7; ++f) {
    A.row(f) = (gen.unit3() * gen.uniform(0.1, 10.0)).transpose();
    b(f) = gen.uniform(0.2, 3.0);
  }
  const Polytope P = Polytope::from_halfspaces(A, b);
  for (int f = 0; f < 7; ++f) CHECK(P.A.row(f).norm() == doctest::Approx(1.0).epsilon(1e-14));
  for (int k = 0; k < 1000; ++k) {
    const Vec3 r = gen.vector(3, -4, 4);
    CHECK(((A * r - b).maxCoeff() <= 0.0) == P.contains(r));
  }
}

TEST_CASE("load_environment: minimal schema") {
  const Environment env = parse_environment(kMinimal);
  CHECK(env.vehicles == 1);
  CHECK(env.segments() == 1);
  CHECK(env.formation.count() == 0);
  CHECK(env.d_min == doctest::Approx(0.4));
  const Environment file_env = load_environment(testing::data_path("envs/minimal.json"));
  CHECK(file_env.segments() == 1);
}

TEST_CASE("load_environment: invariant violations name the invariant") {
  const std::string base = read_file(testing::data_path("envs/toy2.json"));
  nlohmann::json doc = nlohmann::json::parse(base);
  doc["formation"]["waypoints"][0][0] = {2.0, 0.0, 1.5, 0.0};  // inside segment 1 only
  try {
    parse_environment(doc.dump());
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("waypoint outside polytope") != std::string::npos);
    CHECK(std::string(e.what()).find("vehicle 0") != std::string::npos);
  }

  nlohmann::json close = nlohmann::json::parse(base);
  close["formation"]["waypoints"][1][0] = {6.5, 0.8, 1.5, 0.0};
  CHECK_THROWS_AS(parse_environment(close.dump()), ValidationError);

  nlohmann::json outside = nlohmann::json::parse(base);
  outside["starts"][0] = {-0.5, 0.0, 1.5, 0.0};
  CHECK_THROWS_WITH_AS(parse_environment(outside.dump()), doctest::Contains("start outside"), ValidationError);

  nlohmann::json gap = nlohmann::json::parse(base);
  gap["corridors"][1][1]["b"][1] = -4.5;  // second polytope no longer overlaps the first
  CHECK_THROWS_AS(parse_environment(gap.dump()), ValidationError);

  nlohmann::json uneven = nlohmann::json::parse(base);
  uneven["corridors"][1].erase(2);
  CHECK_THROWS_AS(parse_environment(uneven.dump()), ValidationError);

  CHECK_THROWS_AS(parse_environment("{ not json"), ParseError);
  CHECK_THROWS_AS(parse_environment(R"({"vehicles": 1})"), ParseError);
  try {
    load_environment("/nonexistent/env.json");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/env.json") != std::string::npos);
  }
}

TEST_CASE("four-vehicle fixture loads and agrees with an independent membership check") {
  const auto path = testing::data_path("envs/four_vehicle.json");
  const Environment env = load_environment(path);
  CHECK(env.vehicles == 4);
  CHECK(env.formation.count() == 2);
  CHECK(env.segments() == 4);
  CHECK(env.pairs() == 6);

  const nlohmann::json raw = nlohmann::json::parse(read_file(path));
  for (int i = 0; i < 4; ++i) {
    const auto& corridor = raw["corridors"][i];
    CHECK(raw_inside(corridor[0], raw["starts"][i].get<std::vector<double>>()));
    CHECK(raw_inside(corridor[corridor.size() - 1], raw["ends"][i].get<std::vector<double>>()));
    for (std::size_t k = 0; k < raw["formation"]["segment_indices"].size(); ++k) {
      const int e = raw["formation"]["segment_indices"][k].get<int>();
      const auto w = raw["formation"]["waypoints"][i][k].get<std::vector<double>>();
      CHECK(raw_inside(corridor[e - 1], w));
      CHECK(raw_inside(corridor[e], w));
    }
  }
  // Loaded waypoints satisfy the containment invariant.
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 2; ++k) {
      const int e = env.formation.segment_ends[k];
      CHECK(env.corridors[i][e - 1].max_violation(env.formation.waypoints[i][k].position) <= 1e-9);
    }
  }
}

TEST_CASE("load_environment is deterministic") {
  const auto path = testing::data_path("envs/toy2.json");
  const Environment a = load_environment(path);
  const Environment b = load_environment(path);
  REQUIRE(a.segments() == b.segments());
  for (int i = 0; i < a.vehicles; ++i) {
    for (int j = 0; j < a.segments(); ++j) {
      CHECK(a.corridors[i][j].A == b.corridors[i][j].A);
      CHECK(a.corridors[i][j].b == b.corridors[i][j].b);
      CHECK(a.corridors[i][j].obstacle_mask == b.corridors[i][j].obstacle_mask);
    }
  }
  CHECK(a.formation.scale_bounds == b.formation.scale_bounds);
}

TEST_CASE("all shipped fixtures validate") {
  for (const char* name : {"minimal.json", "four_vehicle.json", "toy2.json", "head_on.json", "narrow.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_environment(testing::data_path(std::string("envs/") + name)));
  }
}

TEST_CASE("formation intervals partition the segments") {
  FormationSchedule f;
  f.segment_ends = {1, 3};
  const auto iv = f.intervals(4);
  REQUIRE(iv.size() == 3);
  CHECK(iv[0] == std::make_pair(0, 1));
  CHECK(iv[1] == std::make_pair(1, 3));
  CHECK(iv[2] == std::make_pair(3, 4));
}
