#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "support.hpp"
#include "swarmopt/io.hpp"

using namespace swarmopt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string env(const std::string& name) { return testing::data_path("envs/" + name).string(); }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "swarmopt_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("help and usage errors") {
  const Outcome h = invoke({"--help"});
  CHECK(h.code == cli::kOk);
  CHECK(h.out.find("optimize") != std::string::npos);
  CHECK(h.out.find("baseline") != std::string::npos);
  const Outcome sub = invoke({"optimize", "--help"});
  CHECK(sub.code == cli::kOk);
  CHECK(sub.out.find("--fidelity") != std::string::npos);
  CHECK(invoke({}).code == cli::kBadInput);
  CHECK(invoke({"optimize"}).code == cli::kBadInput);
  CHECK(invoke({"optimize", "--env", env("minimal.json"), "--fidelity", "medium"}).code == cli::kBadInput);
}

TEST_CASE("a missing environment names its path") {
  const Outcome o = invoke({"optimize", "--env", "/no/such/env.json"});
  CHECK(o.code == cli::kBadInput);
  CHECK(o.err.find("/no/such/env.json") != std::string::npos);
}

TEST_CASE("zero iterations write the initialization, which verifies") {
  const fs::path dir = scratch("zero");
  const Outcome o = invoke({"optimize", "--env", env("minimal.json"), "--iters", "0", "--out", dir.string()});
  REQUIRE(o.code == cli::kOk);
  for (const char* f : {"trajectory.csv", "trace.csv", "solution.json", "plot.svg"}) CHECK(fs::exists(dir / f));
  const Solution s = read_solution(dir / "solution.json");
  CHECK(s.makespan == s.init_makespan);
  CHECK(s.feasible);
  REQUIRE(s.report);
  CHECK(s.report->passed);

  const Outcome v = invoke({"verify", "--env", env("minimal.json"), "--solution", (dir / "solution.json").string()});
  CHECK(v.code == cli::kOk);
  CHECK(v.out.find("PASS flatness vehicle 0") != std::string::npos);

  SUBCASE("halving a duration breaks flatness") {
    Solution h = s;
    h.x(0, 0) *= 0.5;
    write_solution(dir / "halved.json", h);
    const Outcome bad = invoke({"verify", "--env", env("minimal.json"), "--solution", (dir / "halved.json").string()});
    CHECK(bad.code == cli::kNoSolution);
    CHECK(bad.err.find("flatness vehicle 0") != std::string::npos);
  }
  SUBCASE("a solution for another environment is rejected") {
    const Outcome bad = invoke({"verify", "--env", env("toy2.json"), "--solution", (dir / "solution.json").string()});
    CHECK(bad.code == cli::kBadInput);
  }
  SUBCASE("--no-plot") {
    const fs::path d2 = scratch("noplot");
    CHECK(invoke({"optimize", "--env", env("minimal.json"), "--iters", "0", "--no-plot", "--out", d2.string()}).code ==
          cli::kOk);
    CHECK_FALSE(fs::exists(d2 / "plot.svg"));
  }
}

TEST_CASE("an empty solution file is a parse error") {
  const fs::path dir = scratch("empty");
  std::ofstream(dir / "solution.json").close();
  const Outcome o = invoke({"verify", "--env", env("minimal.json"), "--solution", (dir / "solution.json").string()});
  CHECK(o.code == cli::kBadInput);
}

TEST_CASE("an infeasible initialization with no iterations reports no solution") {
  const fs::path dir = scratch("toyzero");
  const Outcome o = invoke({"optimize", "--env", env("toy2.json"), "--iters", "0", "--out", dir.string()});
  CHECK(o.code == cli::kNoSolution);
  CHECK(fs::exists(dir / "solution.json"));
}

TEST_CASE("bad configs are input errors") {
  const fs::path dir = scratch("config");
  std::ofstream(dir / "c.json") << "{\"iterations\": 3}";
  CHECK(invoke({"optimize", "--env", env("minimal.json"), "--config", (dir / "c.json").string()}).code == cli::kBadInput);
  std::ofstream(dir / "d.json") << "{\"iters\": -3}";
  CHECK(invoke({"optimize", "--env", env("minimal.json"), "--config", (dir / "d.json").string()}).code == cli::kBadInput);
}

TEST_CASE("baseline with comparison, and a formation wider than its corridor") {
  const fs::path mbo = scratch("mbo");
  REQUIRE(invoke({"optimize", "--env", env("minimal.json"), "--iters", "0", "--out", mbo.string()}).code == cli::kOk);
  const fs::path dir = scratch("baseline");
  const Outcome o = invoke({"baseline", "--env", env("toy2.json"), "--out", dir.string(), "--compare",
                         (mbo / "solution.json").string()});
  CHECK(o.code == cli::kOk);
  for (const char* f : {"trajectory.csv", "trace.csv", "solution.json", "plot.svg", "comparison.csv"})
    CHECK(fs::exists(dir / f));
  CHECK(read_all(dir / "comparison.csv").rfind("makespan_baseline,makespan_mbo,ratio\n", 0) == 0);
  const Outcome v = invoke({"verify", "--env", env("toy2.json"), "--solution", (dir / "solution.json").string()});
  CHECK(v.code == cli::kOk);

  std::string wide = read_all(env("toy2.json"));
  const auto at = wide.find("\"scale_bounds_m\"");
  REQUIRE(at != std::string::npos);
  const auto open = wide.find('[', at), close = wide.find(']', at);
  wide.replace(open, close - open + 1, "[5.0, 5.0, 5.0]");
  std::ofstream(dir / "wide.json") << wide;
  const Outcome w = invoke({"baseline", "--env", (dir / "wide.json").string(), "--out", (dir / "w").string()});
  CHECK(w.code == cli::kNoSolution);
}

TEST_CASE("identical invocations give byte-identical csv files") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::string cfg = (scratch("det_cfg") / "c.json").string();
  std::ofstream(cfg) << R"({"batch": 8, "bootstrap": 8, "n_s": 64, "n_1": 16, "n_2": 48})";
  for (const fs::path& d : {a, b})
    invoke({"optimize", "--env", env("head_on.json"), "--iters", "2", "--seed", "3", "--config", cfg, "--out",
         d.string()});
  for (const char* f : {"trajectory.csv", "trace.csv", "solution.json"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(read_all(a / f) == read_all(b / f));
  }
}

TEST_CASE("the seed falls back to the environment variable") {
  const fs::path dir = scratch("envseed");
  ::setenv("SWARM_OPT_SEED", "42", 1);
  const Outcome o = invoke({"optimize", "--env", env("minimal.json"), "--iters", "0", "--out", dir.string()});
  ::unsetenv("SWARM_OPT_SEED");
  REQUIRE(o.code == cli::kOk);
  CHECK(read_solution(dir / "solution.json").seed == 42);
  ::setenv("SWARM_OPT_SEED", "abc", 1);
  CHECK(invoke({"optimize", "--env", env("minimal.json"), "--iters", "0", "--out", dir.string()}).code == cli::kBadInput);
  ::unsetenv("SWARM_OPT_SEED");
}
