#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "swarmopt/acquisition.hpp"
#include "swarmopt/collision.hpp"
#include "swarmopt/geometry.hpp"
#include "swarmopt/hifisim.hpp"
#include "swarmopt/modular.hpp"
#include "swarmopt/polytraj.hpp"

namespace swarmopt {

inline constexpr int kLowFidelity = 0;
inline constexpr int kHighFidelity = 1;

struct OptimizerConfig {
  int iters = 200;
  int single_iters = -1;  // single-fidelity seed run of a multi-fidelity run; negative: iters
  int batch = 128;      // single fidelity
  int batch_low = 64;   // multi-fidelity, per low-fidelity iteration
  int batch_high = 4;   // multi-fidelity, per high-fidelity iteration
  int bootstrap = 64;
  std::uint64_t seed = 0;

  Thresholds thresholds;
  SamplerOptions sampler;
  std::vector<double> cost{1.0, 10.0};
  std::vector<double> h{0.001, 0.001};
  std::vector<double> beta{3.0, 3.0};

  FitOptions fit;
  int full_search_every = 10;  // iterations between multi-start hyperparameter searches
  int warm_iters = 3;          // BFGS iterations of the warm-started refits in between
  std::size_t data_cap = 512;  // most recent records per module used for fitting

  int converge_window = 50;
  double converge_tol = 1e-3;
  double batch_budget_s = 60.0;  // halve the batch when an evaluation round takes longer
  bool record_wall = false;      // wall_ms column; zero keeps traces byte-identical

  SnapWeights weights;
  SnapOptions snap;
  double low_dt = 0.01;
  double tracking_bound = 0.05;
  SimOptions sim;
  double corridor_tolerance = 1e-4;

  int jobs = 1;
};

struct EvaluationRecord {
  Allocation x;
  int level = kLowFidelity;
  std::vector<int> vehicle_labels;
  std::vector<int> pair_labels;  // lexicographic pair order
  double makespan = 0.0;
  std::string diagnostic;

  bool feasible() const;
};

/// Ground-truth evaluation of an allocation at a fidelity level.
EvaluationRecord evaluate(const Environment& env, const Allocation& x, int level, const OptimizerConfig& config);

/// x_ij * mean_i(S_ik) / S_ik on every range k: each vehicle's interval sum
/// becomes the mean interval sum, and the segment ratios inside an interval
/// are kept.
Allocation equalize_intervals(const Allocation& x, const std::vector<std::pair<int, int>>& ranges);

/// Smallest eta >= 1 (to 1e-3) for which `ok(eta * x)` holds; 1 if x already
/// passes. Throws NoFeasibleScaleError if eta = 20 fails.
double slow_down(const Allocation& x, const std::function<bool(const Allocation&)>& ok);

struct Initialization {
  Allocation x;
  double makespan = 0.0;
  std::vector<double> vehicle_eta;
  double slowdown = 1.0;
};

/// Per-vehicle snap-optimal split and flatness scaling, interval
/// equalization, then a uniform slow-down until every vehicle passes the
/// low-fidelity check again.
Initialization initialize(const Environment& env, const OptimizerConfig& config);

struct TraceRow {
  int iter = 0;
  double best_makespan = std::numeric_limits<double>::infinity();
  double accept_c1 = -1.0;
  double accept_c2 = -1.0;
  int batch = 0;
  int level = 0;
  double wall_ms = 0.0;
};

struct Incumbent {
  Allocation x;
  double makespan = std::numeric_limits<double>::infinity();
  bool valid() const { return std::isfinite(makespan); }
};

struct OptimizerState {
  int levels = 1;
  Initialization init;
  Normalizer normalizer;
  Dataset dataset;
  std::vector<EvaluationRecord> records;
  ModularSurrogate surrogate;
  Thresholds thresholds;
  std::vector<Incumbent> incumbents;  // per level
  std::vector<int> batch;             // per level
  int iteration = 0;
  int last_improvement = 0;
  std::mt19937_64 rng;
  std::vector<TraceRow> trace;
  std::vector<std::string> warnings;
  std::vector<char> dirty;  // per level: records added since the last fit
};

struct RunResult {
  bool feasible = false;
  Allocation x;  // incumbent, or the best predicted candidate when infeasible
  double makespan = std::numeric_limits<double>::infinity();
  int level = 0;  // fidelity at which x was verified
  Initialization init;
  std::vector<TraceRow> trace;
  std::vector<std::string> warnings;
  OptimizerState state;
};

/// Fresh state: initialization, normalization, the bootstrap batch at the
/// low fidelity, and for multi-fidelity runs the single-fidelity seed.
OptimizerState start_single(const Environment& env, const OptimizerConfig& config);

/// Multi-fidelity state seeded from a finished single-fidelity run: its
/// low-fidelity records, and its result slowed until the high-fidelity
/// checks pass as the first high-fidelity incumbent.
OptimizerState start_multi(const Environment& env, const OptimizerConfig& config, const RunResult& single);

/// One iteration: refit, sample candidates, select, evaluate, update.
void step(const Environment& env, const OptimizerConfig& config, OptimizerState& state);

/// Iterates until config.iters or convergence.
RunResult run(const Environment& env, const OptimizerConfig& config, OptimizerState state,
              const std::filesystem::path& checkpoint = {});

RunResult run_single(const Environment& env, const OptimizerConfig& config,
                     const std::filesystem::path& checkpoint = {});
RunResult run_multi(const Environment& env, const OptimizerConfig& config,
                    const std::filesystem::path& checkpoint = {});

/// Trajectories chi(x_i) of every vehicle.
std::vector<PiecewiseTrajectory> build_trajectories(const Environment& env, const Allocation& x,
                                                    const OptimizerConfig& config);

void save_checkpoint(const std::filesystem::path& path, const OptimizerState& state);
/// Restores records, thresholds, incumbents, counters and the random stream;
/// modules are refitted from the records on the next step.
OptimizerState load_checkpoint(const std::filesystem::path& path, const Environment& env,
                               const OptimizerConfig& config);

}  // namespace swarmopt
