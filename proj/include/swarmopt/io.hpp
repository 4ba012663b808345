#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swarmopt/geometry.hpp"
#include "swarmopt/optimizer.hpp"
#include "swarmopt/verify.hpp"

namespace swarmopt {

struct Solution {
  std::string method = "mbo";  // "mbo" or "formation"
  std::string fidelity = "low";
  int level = kLowFidelity;    // fidelity at which the solution was checked
  bool feasible = false;
  double makespan = 0.0;
  double init_makespan = 0.0;
  Allocation x;                // for the formation baseline every row holds the center durations
  std::uint64_t seed = 0;
  int iterations = 0;
  std::vector<std::string> warnings;
  std::optional<VerificationReport> report;
};

void write_solution(const std::filesystem::path& path, const Solution& solution);
/// Throws ParseError on an empty, malformed or incomplete document.
Solution read_solution(const std::filesystem::path& path);

/// vehicle,t,x,y,z,yaw at t = 0, dt, ... and at each vehicle's end time.
void write_trajectory_csv(const std::filesystem::path& path, const std::vector<const FlatTrajectory*>& trajectories,
                          double dt = 0.01);

/// iter,best_makespan_s,accept_rate_c1,accept_rate_c2,batch,level,wall_ms. Rates that
/// were not measured are left empty, a missing incumbent is "inf".
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace);

/// Top-down view: horizontal sections of the corridors, paths, formation
/// waypoints as circles of radius d_min / 2.
void write_plot_svg(const std::filesystem::path& path, const Environment& env,
                    const std::vector<const FlatTrajectory*>& trajectories);

/// makespan_baseline,makespan_mbo,ratio
void write_comparison_csv(const std::filesystem::path& path, double baseline, double mbo);

/// Overrides on top of `base` from a JSON object. Unknown keys are errors.
OptimizerConfig parse_config(std::string_view text, OptimizerConfig base = {});
OptimizerConfig load_config(const std::filesystem::path& path, OptimizerConfig base = {});

/// Verification settings matching an optimizer configuration.
VerifyOptions verify_options(const OptimizerConfig& config, bool high_fidelity);

}  // namespace swarmopt
