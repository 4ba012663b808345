#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "swarmopt/modular.hpp"
#include "swarmopt/surrogate.hpp"
#include "swarmopt/types.hpp"

namespace swarmopt {

inline constexpr double kThresholdMin = 1e-4;
inline constexpr double kThresholdMax = 0.999;

/// Rejection thresholds C1 (per vehicle) and C2 (per pair).
struct Thresholds {
  double c1 = 0.8;
  double c2 = 0.8;
  double target = 0.25;  // acceptance rate the adaptation steers toward
  double step = 0.01;    // relative change per iteration

  /// Moves each threshold by exactly one relative step toward the target
  /// acceptance: a low rate loosens (lowers) it, a high rate tightens it.
  /// A negative rate means "not measured" and leaves that threshold alone.
  void adapt(double rate1, double rate2);
};

struct SamplerOptions {
  int n_s = 1024;       // draws per sampling round
  int n_1 = 256;        // per-vehicle survivors per formation sample
  int n_2 = 2048;       // joint candidates
  double sigma = 0.15;  // log-normal perturbation
  int starvation_rounds = 50;
  int max_rounds = 10000;
};

/// What candidate generation needs to know about the problem.
struct SamplingContext {
  const ModularSurrogate* surrogate = nullptr;
  int level = 0;                             // level whose predictions filter candidates
  Normalizer normalizer;
  Allocation center;                         // perturbation center (s)
  std::vector<std::pair<int, int>> synced;   // synchronized segment ranges
};

/// Synchronized segment ranges: one per formation waypoint.
std::vector<std::pair<int, int>> synchronized_intervals(const std::vector<int>& segment_ends);

/// Interval sums of row i over the ranges.
Eigen::VectorXd interval_sums(const Allocation& x, int i, const std::vector<std::pair<int, int>>& ranges);

/// Scales each vehicle's durations inside every range so the range sums equal
/// `targets`; segments outside the ranges are unchanged.
Allocation rescale_intervals(const Allocation& x, const Eigen::VectorXd& targets,
                             const std::vector<std::pair<int, int>>& ranges);

/// Largest |interval sum - target| over vehicles and ranges.
double synchronization_error(const Allocation& x, const Eigen::VectorXd& targets,
                             const std::vector<std::pair<int, int>>& ranges);

/// Log-normal perturbation of a duration row with one 3-tap moving-average
/// pass over the log factors.
Eigen::RowVectorXd perturb_row(const Eigen::RowVectorXd& center, double sigma, std::mt19937_64& rng);

struct SampleStats {
  long drawn = 0;
  long accepted = 0;
  std::vector<std::string> warnings;
};

/// Per-vehicle candidates (rows of raw durations) whose synchronized interval
/// sums equal xf and whose predicted feasibility is at least C1. Modules that
/// have not seen both labels do not filter: they know no boundary.
std::vector<Eigen::RowVectorXd> sample_traj(int vehicle, const Eigen::VectorXd& xf, const SamplingContext& ctx,
                                            Thresholds& thresholds, const SamplerOptions& options,
                                            std::mt19937_64& rng, SampleStats& stats);

struct CandidateSet {
  std::vector<Allocation> candidates;
  std::vector<Eigen::VectorXd> formation;       // X_F of each candidate
  // Cached predictions [level][module][candidate].
  std::vector<std::vector<std::vector<Prediction>>> predictions;
  double accept1 = -1.0;                        // acceptance rates (-1: nothing tested)
  double accept2 = -1.0;
  std::vector<std::string> warnings;

  int size() const { return static_cast<int>(candidates.size()); }
};

/// Joint candidates: formation samples X_F, per-vehicle survivors, then
/// vehicle-by-vehicle joins filtered by pair probability >= C2.
CandidateSet build_candidates(const SamplingContext& ctx, Thresholds& thresholds, const SamplerOptions& options,
                              std::mt19937_64& rng);

/// Fills the cached predictions of every module at every level.
void predict_candidates(const ModularSurrogate& surrogate, const Normalizer& normalizer, CandidateSet& set);

/// Makespan max_i sum_j x_ij.
double makespan(const Allocation& x);

inline constexpr double kSigmaFloor = 1e-9;

/// -sum over modules of |mu| / sigma.
double alpha_explore(const std::vector<Prediction>& modules);

/// (reference - makespan) times the product of penalized probabilities when
/// every penalized probability is at least h, else 0.
double alpha_exploit(double reference_makespan, double candidate_makespan, const std::vector<Prediction>& modules,
                     double beta, double h);

struct LevelPolicy {
  double cost = 1.0;
  double beta = 3.0;
  double h = 0.001;
  int batch = 128;
  double reference = 0.0;  // makespan of the level's incumbent
};

struct Selection {
  int candidate = 0;
  int level = 0;
  double value = 0.0;
  bool exploit = false;
};

/// Chooses the next evaluations. Exploit values are divided by the level
/// cost, explore values (never positive) multiplied by it, so a costlier
/// level always ranks lower at equal raw value. If any exploit value is
/// positive the batch is ranked by exploit; otherwise by explore. The level
/// of the top-ranked entry fixes the level (and batch size) of the whole
/// batch. Exploit batches are topped up with gate-passing candidates ranked
/// by explore. Candidates are distinct; ties go to the lower index.
std::vector<Selection> select_next(const CandidateSet& set, const std::vector<LevelPolicy>& levels);

}  // namespace swarmopt
