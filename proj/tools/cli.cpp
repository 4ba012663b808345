#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "swarmopt/baseline.hpp"
#include "swarmopt/errors.hpp"
#include "swarmopt/io.hpp"
#include "swarmopt/optimizer.hpp"
#include "swarmopt/verify.hpp"

namespace fs = std::filesystem;

namespace swarmopt::cli {

namespace {

struct Common {
  std::string env;
  std::string config;
  std::string out = ".";
  bool no_plot = false;
  int jobs = 1;
};

struct OptimizeArgs {
  Common common;
  std::optional<int> iters;
  std::optional<int> single_iters;
  std::optional<int> batch;
  std::optional<std::uint64_t> seed;
  std::string fidelity = "low";
  std::string checkpoint;
};

struct VerifyArgs {
  std::string env;
  std::string solution;
  std::string config;
  std::string report;
};

struct BaselineArgs {
  Common common;
  std::string compare;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* s = std::getenv("SWARM_OPT_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw ParseError(std::string("SWARM_OPT_SEED is not an unsigned integer: ") + s);
    }
  }
  return 0;
}

Environment load_env(const std::string& path) {
  if (!fs::exists(path)) throw ParseError("environment file not found: " + path);
  return load_environment(path);
}

OptimizerConfig base_config(const std::string& path, int jobs) {
  OptimizerConfig c = path.empty() ? OptimizerConfig{} : load_config(path);
  c.jobs = std::max(c.jobs, jobs);
  return c;
}

// Owns the reconstructed trajectories of a solution.
struct Flown {
  std::vector<PiecewiseTrajectory> planned;
  std::vector<FormationMemberTrajectory> members;

  std::vector<const FlatTrajectory*> pointers() const {
    std::vector<const FlatTrajectory*> out;
    for (const auto& t : planned) out.push_back(&t);
    for (const auto& t : members) out.push_back(&t);
    return out;
  }
};

Flown fly(const Environment& env, const Solution& s, const OptimizerConfig& config) {
  if (s.x.rows() != env.vehicles || s.x.cols() != env.segments())
    throw ValidationError("solution allocation is " + std::to_string(s.x.rows()) + "x" + std::to_string(s.x.cols()) +
                          ", the environment needs " + std::to_string(env.vehicles) + "x" +
                          std::to_string(env.segments()));
  Flown f;
  if (s.method == "formation") {
    const Eigen::VectorXd row = s.x.row(0).transpose();
    f.members = formation_members(env, std::vector<double>(row.data(), row.data() + row.size()), config.weights,
                                  config.snap);
  } else {
    f.planned = build_trajectories(env, s.x, config);
  }
  return f;
}

VerificationReport check(const Environment& env, const Solution& s, const Flown& f, const OptimizerConfig& config) {
  VerifyOptions o = verify_options(config, s.level == kHighFidelity);
  o.obstacle_faces_only = s.method == "formation";
  return verify_trajectories(env, f.pointers(), s.x, o);
}

void print_report(std::ostream& out, const VerificationReport& r) {
  for (const auto& c : r.checks)
    out << (c.passed ? "PASS " : "FAIL ") << c.constraint << ' ' << c.subject << " margin " << c.margin << '\n';
}

void write_artifacts(const fs::path& dir, const Environment& env, const Solution& s, const Flown& f,
                     const std::vector<TraceRow>& trace, bool plot) {
  fs::create_directories(dir);
  write_trajectory_csv(dir / "trajectory.csv", f.pointers());
  write_trace_csv(dir / "trace.csv", trace);
  write_solution(dir / "solution.json", s);
  if (plot) write_plot_svg(dir / "plot.svg", env, f.pointers());
}

int cmd_optimize(const OptimizeArgs& a, std::ostream& out, std::ostream& err) {
  const Environment env = load_env(a.common.env);
  OptimizerConfig config = base_config(a.common.config, a.common.jobs);
  const bool multi = a.fidelity == "multi";
  if (a.iters)
    config.iters = *a.iters;
  else if (multi && a.common.config.empty())
    config.iters = 50;
  if (a.single_iters) config.single_iters = *a.single_iters;
  if (a.batch) (multi ? config.batch_low : config.batch) = *a.batch;
  config.seed = resolve_seed(a.seed);

  const RunResult r = multi ? run_multi(env, config, a.checkpoint) : run_single(env, config, a.checkpoint);

  Solution s;
  s.method = "mbo";
  s.fidelity = a.fidelity;
  s.level = r.level;
  s.feasible = r.feasible;
  s.makespan = r.makespan;
  s.init_makespan = r.init.makespan;
  s.x = r.x;
  s.seed = config.seed;
  s.iterations = static_cast<int>(r.trace.size());
  s.warnings = r.warnings;
  const Flown f = fly(env, s, config);
  s.report = check(env, s, f, config);
  write_artifacts(a.common.out, env, s, f, r.trace, !a.common.no_plot);

  out << "makespan " << s.makespan << " s (initialization " << s.init_makespan << " s), " << s.iterations
      << " iterations, artifacts in " << a.common.out << '\n';
  if (!r.feasible) {
    err << "error: no ground-truth feasible solution found\n";
    return kNoSolution;
  }
  if (!s.report->passed) {
    err << "error: solution failed verification\n";
    for (const auto& line : s.report->failures()) err << "  " << line << '\n';
    return kNoSolution;
  }
  return kOk;
}

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  const Environment env = load_env(a.env);
  const OptimizerConfig config = base_config(a.config, 1);
  if (!fs::exists(a.solution)) throw ParseError("solution file not found: " + a.solution);
  Solution s = read_solution(a.solution);
  const Flown f = fly(env, s, config);
  const VerificationReport r = check(env, s, f, config);
  print_report(out, r);
  if (!a.report.empty()) {
    s.report = r;
    write_solution(a.report, s);
  }
  if (!r.passed) {
    for (const auto& line : r.failures()) err << "violated: " << line << '\n';
    return kNoSolution;
  }
  out << "verification passed\n";
  return kOk;
}

int cmd_baseline(const BaselineArgs& a, std::ostream& out, std::ostream& err) {
  const Environment env = load_env(a.common.env);
  const OptimizerConfig config = base_config(a.common.config, a.common.jobs);
  std::optional<Solution> prior;
  if (!a.compare.empty()) {
    if (!fs::exists(a.compare)) throw ParseError("solution file not found: " + a.compare);
    prior = read_solution(a.compare);
  }
  const BaselineResult b = formation_baseline(env, config.weights, config.snap, config.low_dt);

  Solution s;
  s.method = "formation";
  s.level = kLowFidelity;
  s.feasible = true;
  s.makespan = b.makespan;
  s.init_makespan = b.makespan;
  s.x.resize(env.vehicles, env.segments());
  for (int i = 0; i < env.vehicles; ++i)
    for (int j = 0; j < env.segments(); ++j) s.x(i, j) = b.center_durations[static_cast<std::size_t>(j)];
  s.warnings.push_back("uniform slow-down " + std::to_string(b.eta) + " on the worst-case center allocation");
  Flown f;
  f.members = b.vehicles;
  s.report = check(env, s, f, config);
  write_artifacts(a.common.out, env, s, f, {}, !a.common.no_plot);
  if (prior) write_comparison_csv(fs::path(a.common.out) / "comparison.csv", b.makespan, prior->makespan);

  out << "formation baseline makespan " << b.makespan << " s";
  if (prior) out << ", optimized " << prior->makespan << " s, ratio " << b.makespan / prior->makespan;
  out << '\n';
  if (!s.report->passed) {
    err << "error: baseline failed verification\n";
    for (const auto& line : s.report->failures()) err << "  " << line << '\n';
    return kNoSolution;
  }
  return kOk;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--env", c.env, "environment file (JSON)")->required();
  sub->add_option("--config", c.config, "JSON file overriding optimizer defaults");
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_option("--jobs", c.jobs, "parallel evaluations")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_flag("--no-plot", c.no_plot, "skip plot.svg");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Time-optimal multi-quadrotor trajectories through corridors with synchronized formations", "swarmopt"};
  app.require_subcommand(1);

  OptimizeArgs opt;
  CLI::App* optimize = app.add_subcommand("optimize", "optimize the time allocation");
  add_common(optimize, opt.common);
  optimize->add_option("--iters", opt.iters, "iterations (default 200, 50 with --fidelity multi)");
  optimize->add_option("--single-iters", opt.single_iters, "iterations of the single-fidelity seed run (multi)");
  optimize->add_option("--batch", opt.batch, "evaluations per iteration (low fidelity)")->check(CLI::PositiveNumber);
  optimize->add_option("--seed", opt.seed, "random seed (falls back to SWARM_OPT_SEED, then 0)");
  optimize->add_option("--fidelity", opt.fidelity, "low or multi")
      ->check(CLI::IsMember({"low", "multi"}))
      ->capture_default_str();
  optimize->add_option("--checkpoint", opt.checkpoint, "resume from and save to this file");

  VerifyArgs ver;
  CLI::App* verify = app.add_subcommand("verify", "independently check a solution");
  verify->add_option("--env", ver.env, "environment file (JSON)")->required();
  verify->add_option("--solution", ver.solution, "solution.json")->required();
  verify->add_option("--config", ver.config, "JSON file overriding optimizer defaults");
  verify->add_option("--report", ver.report, "write the solution with this report attached");

  BaselineArgs base;
  CLI::App* baseline = app.add_subcommand("baseline", "formation-control baseline");
  add_common(baseline, base.common);
  baseline->add_option("--compare", base.compare, "optimized solution.json to compare against");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    // --help on a subcommand lands here as well
    if (e.get_exit_code() == 0) {
      for (CLI::App* sub : {optimize, verify, baseline})
        if (sub->parsed()) {
          out << sub->help();
          return kOk;
        }
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n" << "run 'swarmopt --help' for usage\n";
    return kBadInput;
  }

  try {
    if (optimize->parsed()) return cmd_optimize(opt, out, err);
    if (verify->parsed()) return cmd_verify(ver, out, err);
    return cmd_baseline(base, out, err);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const InfeasibleError& e) {
    err << "error: no feasible solution: " << e.what() << '\n';
    return kNoSolution;
  } catch (const NoFeasibleScaleError& e) {
    err << "error: no feasible solution: " << e.what() << '\n';
    return kNoSolution;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace swarmopt::cli
