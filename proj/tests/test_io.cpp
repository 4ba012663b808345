#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "trajectories.hpp"
#include "swarmopt/errors.hpp"
#include "swarmopt/io.hpp"
#include "swarmopt/verify.hpp"

using namespace swarmopt;
using testing::Gen;

namespace {

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

int count(const std::string& s, const std::string& what) {
  int n = 0;
  for (std::size_t p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++n;
  return n;
}

struct Planned {
  Environment env;
  Allocation x;
  std::vector<PiecewiseTrajectory> trajs;

  std::vector<const FlatTrajectory*> ptrs() const {
    std::vector<const FlatTrajectory*> p;
    for (const auto& t : trajs) p.push_back(&t);
    return p;
  }
};

Planned planned(const std::string& name, const std::function<void(Allocation&)>& edit = {}) {
  Planned p;
  p.env = load_environment(testing::data_path("envs/" + name));
  const OptimizerConfig c;
  p.x = initialize(p.env, c).x;
  if (edit) edit(p.x);
  p.trajs = build_trajectories(p.env, p.x, c);
  return p;
}

}  // namespace

TEST_CASE("solution files round-trip") {
  Solution s;
  s.method = "formation";
  s.fidelity = "multi";
  s.level = kHighFidelity;
  s.feasible = true;
  s.makespan = 3.25;
  s.init_makespan = 4.5;
  s.x.resize(2, 3);
  s.x << 1.0, 1.25, 1.0 / 3.0, 0.5, 2.0, 0.75;
  s.seed = 12345678901234ull;
  s.iterations = 17;
  s.warnings = {"first", "second"};
  VerificationReport r;
  r.add({"corridor", "vehicle 0", 0.1, true});
  s.report = r;
  const auto path = testing::temp_file("roundtrip.json", "");
  write_solution(path, s);
  const Solution t = read_solution(path);
  CHECK(t.method == s.method);
  CHECK(t.fidelity == s.fidelity);
  CHECK(t.level == s.level);
  CHECK(t.feasible);
  CHECK(t.makespan == s.makespan);
  CHECK(t.init_makespan == s.init_makespan);
  CHECK(t.x == s.x);  // doubles survive exactly
  CHECK(t.seed == s.seed);
  CHECK(t.iterations == 17);
  CHECK(t.warnings == s.warnings);
  REQUIRE(t.report);
  REQUIRE(t.report->checks.size() == 1);
  CHECK(t.report->checks[0].subject == "vehicle 0");
  CHECK(t.report->passed);
}

TEST_CASE("bad solution files are rejected") {
  CHECK_THROWS_AS(read_solution(testing::temp_file("empty.json", "")), ParseError);
  CHECK_THROWS_AS(read_solution(testing::temp_file("broken.json", "{\"allocation\": [[1, 2]")), ParseError);
  CHECK_THROWS_AS(read_solution(testing::temp_file("array.json", "[1, 2]")), ParseError);
  CHECK_THROWS_AS(read_solution(testing::temp_file("noalloc.json", "{\"makespan\": 1}")), ParseError);
  CHECK_THROWS_AS(read_solution(testing::temp_file("ragged.json", "{\"allocation\": [[1, 2], [1]]}")), ParseError);
  CHECK_THROWS_AS(read_solution(testing::temp_file("negative.json", "{\"allocation\": [[1, -2]]}")), ParseError);
  CHECK_THROWS_AS(read_solution(testing::temp_file("text.json", "{\"allocation\": [[1, \"a\"]]}")), ParseError);
  CHECK_THROWS_AS(read_solution(testing::temp_file("method.json", "{\"method\": \"x\", \"allocation\": [[1]]}")),
                  ParseError);
  CHECK_THROWS_AS(read_solution("/nonexistent/dir/solution.json"), IoError);
  CHECK(read_solution(testing::temp_file("bare.json", "{\"allocation\": [[1, 2]]}")).x.cols() == 2);
}

TEST_CASE("trace csv") {
  std::vector<TraceRow> rows(3);
  rows[0] = {0, std::numeric_limits<double>::infinity(), 0.5, -1.0, 128, 0, 0.0};
  rows[1] = {1, 2.5, -1.0, 0.25, 64, 1, 0.0};
  rows[2] = {2, 2.125, 1.0, 1.0, 4, 1, 12.5};
  const auto path = testing::temp_file("trace.csv", "");
  write_trace_csv(path, rows);
  const auto l = lines(read_all(path));
  REQUIRE(l.size() == 4);
  CHECK(l[0] == "iter,best_makespan_s,accept_rate_c1,accept_rate_c2,batch,level,wall_ms");
  CHECK(l[1] == "0,inf,0.5,,128,0,0");
  CHECK(l[2] == "1,2.5,,0.25,64,1,0");
  CHECK(l[3] == "2,2.125,1,1,4,1,12.5");
}

TEST_CASE("trajectory csv samples every vehicle to its end") {
  const auto a = testing::circle(1.0, 2.0, 1.0);
  const auto b = testing::hover(Vec3(1, 2, 3), 0.055, 0.5);
  const auto path = testing::temp_file("traj.csv", "");
  write_trajectory_csv(path, {&a, &b}, 0.01);
  const auto l = lines(read_all(path));
  CHECK(l[0] == "vehicle,t,x,y,z,yaw");
  int first = 0, second = 0;
  for (std::size_t k = 1; k < l.size(); ++k) (l[k][0] == '0' ? first : second)++;
  CHECK(first == 101);
  CHECK(second == 7);  // 0, 0.01, ..., 0.05 and the end time
  CHECK(l[1] == "0,0,1,0,1,0");
  CHECK(l.back() == "1,0.055,1,2,3,0.5");
}

TEST_CASE("plot and comparison outputs") {
  const Planned p = planned("toy2.json");
  const auto svg = testing::temp_file("plot.svg", "");
  write_plot_svg(svg, p.env, p.ptrs());
  const std::string s = read_all(svg);
  CHECK(s.rfind("<svg", 0) == 0);
  CHECK(s.find("</svg>") != std::string::npos);
  CHECK(count(s, "<polyline") == 2);
  CHECK(count(s, "<circle") == 2);  // one formation waypoint per vehicle
  CHECK(count(s, "<polygon") == 6);

  const auto cmp = testing::temp_file("comparison.csv", "");
  write_comparison_csv(cmp, 3.0, 2.0);
  CHECK(read_all(cmp) == "makespan_baseline,makespan_mbo,ratio\n3,2,1.5\n");
}

TEST_CASE("config overrides") {
  const OptimizerConfig c = parse_config(R"({"iters": 7, "batch": 16, "h": [0.01, 0.02], "beta": [1, 2],
      "threshold_init": 0.6, "n_s": 64, "mu_psi": 0.5, "sim_rate_hz": 250, "record_wall": true})");
  CHECK(c.iters == 7);
  CHECK(c.batch == 16);
  CHECK(c.h == std::vector<double>{0.01, 0.02});
  CHECK(c.beta == std::vector<double>{1, 2});
  CHECK(c.thresholds.c1 == 0.6);
  CHECK(c.thresholds.c2 == 0.6);
  CHECK(c.sampler.n_s == 64);
  CHECK(c.weights.yaw == 0.5);
  CHECK(c.sim.rate_hz == 250);
  CHECK(c.record_wall);
  CHECK(c.batch_low == OptimizerConfig{}.batch_low);  // untouched keys keep their defaults

  CHECK(parse_config("{}").iters == 200);
  CHECK_THROWS_AS(parse_config(R"({"iterations": 3})"), ParseError);
  CHECK_THROWS_AS(parse_config("{"), ParseError);
  CHECK_THROWS_AS(parse_config("[]"), ParseError);
  CHECK_THROWS_AS(parse_config(R"({"iters": "many"})"), ParseError);
  CHECK_THROWS_AS(parse_config(R"({"h": [0.1]})"), ParseError);
  CHECK_THROWS_AS(parse_config(R"({"iters": -1})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"threshold_init": 1.5})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"cost": [1, 0]})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"jobs": 0})"), ValidationError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("finite-difference derivatives match the analytic ones") {
  const auto c = testing::circle(1.5, 2.0, 3.0);
  const FiniteDifferenceTrajectory fd(c, 5e-3);
  Gen g(5);
  // truncation: r w^5 h^2 / 4 for the jerk, r w^6 h^2 / 6 for the snap (w = pi)
  const double h2 = 25e-6, r = 1.5, w = M_PI;
  for (int k = 0; k < 50; ++k) {
    const double t = g.uniform(0.02, 2.98);
    const FlatOutput a = c.sample(t), b = fd.sample(t);
    CHECK((a.velocity - b.velocity).norm() < 1e-6);
    CHECK((a.acceleration - b.acceleration).norm() < 1e-5);
    CHECK((a.jerk - b.jerk).norm() < 1.1 * r * std::pow(w, 5) * h2 / 4);
    CHECK((a.snap - b.snap).norm() < 1.1 * r * std::pow(w, 6) * h2 / 6);
  }
}

TEST_CASE("verification of planned trajectories") {
  SUBCASE("the initialization of a single vehicle passes") {
    const Planned p = planned("minimal.json");
    const VerificationReport r = verify_trajectories(p.env, p.ptrs(), p.x);
    for (const auto& f : r.failures()) MESSAGE(f);
    CHECK(r.passed);
    for (const char* c : {"corridor", "flatness", "waypoint"}) {
      bool present = false;
      for (const auto& k : r.checks) present = present || k.constraint == c;
      CHECK(present);
    }
  }
  SUBCASE("a halved duration names a flatness violation") {
    const Planned p = planned("minimal.json", [](Allocation& x) { x(0, 0) *= 0.5; });
    const VerificationReport r = verify_trajectories(p.env, p.ptrs(), p.x);
    CHECK_FALSE(r.passed);
    bool named = false;
    for (const auto& f : r.failures()) named = named || f.rfind("flatness vehicle 0", 0) == 0;
    CHECK(named);
  }
  SUBCASE("a synchronized head-on crossing violates separation") {
    const Planned p = planned("head_on.json", [](Allocation& x) { x.row(1) = x.row(0); });
    const VerificationReport r = verify_trajectories(p.env, p.ptrs(), p.x);
    CHECK_FALSE(r.passed);
    bool named = false;
    for (const auto& f : r.failures()) named = named || f.rfind("separation pair 0-1", 0) == 0;
    CHECK(named);
  }
  SUBCASE("unequal formation times violate synchronization and the waypoint") {
    Planned p = planned("toy2.json");
    Allocation shifted = p.x;
    shifted(1, 0) += 0.05;
    shifted(1, 2) -= 0.05;
    const VerificationReport r = verify_trajectories(p.env, p.ptrs(), shifted);
    bool sync = false;
    for (const auto& f : r.failures()) sync = sync || f.rfind("synchronization interval 0", 0) == 0;
    CHECK(sync);
  }
  SUBCASE("one trajectory per vehicle") {
    const Planned p = planned("toy2.json");
    CHECK_THROWS_AS(verify_trajectories(p.env, {p.ptrs()[0]}, p.x), DimensionError);
  }
}

TEST_CASE("high-fidelity verification adds tracking checks") {
  const Planned p = planned("minimal.json", [](Allocation& x) { x *= 1.5; });
  VerifyOptions o;
  o.high_fidelity = true;
  const VerificationReport r = verify_trajectories(p.env, p.ptrs(), p.x, o);
  bool tracking = false;
  for (const auto& c : r.checks) tracking = tracking || c.constraint == "tracking";
  CHECK(tracking);
  o.tracking_bound = 1e-9;
  CHECK_FALSE(verify_trajectories(p.env, p.ptrs(), p.x, o).passed);
}
