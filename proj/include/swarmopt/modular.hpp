#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "swarmopt/surrogate.hpp"
#include "swarmopt/types.hpp"

namespace swarmopt {

/// Module indexing: vehicles 0..N_v-1 first, then pairs (0,1), (0,2), ...,
/// (1,2), ... in lexicographic order.
int module_count(int vehicles);
int pair_module(int i, int j, int vehicles);
/// (i, j) for a module index; j = -1 for vehicle modules.
std::pair<int, int> module_members(int module, int vehicles);

/// Element-wise division by the reference (initial) allocation.
struct Normalizer {
  Allocation reference;

  Eigen::VectorXd vehicle(const Allocation& x, int i) const;
  Eigen::VectorXd pair(const Allocation& x, int i, int j) const;
  Eigen::VectorXd input(const Allocation& x, int module) const;
  Allocation normalize(const Allocation& x) const;
  Allocation denormalize(const Allocation& z) const;
};

struct ModuleData {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  void add(const Eigen::VectorXd& z, int label);
  /// The `cap` most recent records as matrices (all when cap == 0).
  void recent(std::size_t cap, Eigen::MatrixXd& X, Eigen::VectorXi& y) const;
};

/// Records per fidelity level and module.
struct Dataset {
  int vehicles = 0;
  std::vector<std::vector<ModuleData>> levels;  // [level][module]

  Dataset() = default;
  Dataset(int vehicles, int level_count);
  ModuleData& at(int level, int module) { return levels[level][module]; }
  const ModuleData& at(int level, int module) const { return levels[level][module]; }
};

/// Per-level GP classifier modules. Level 0 modules are plain classifiers;
/// level l > 0 modules are autoregressive corrections of level l - 1.
class ModularSurrogate {
 public:
  ModularSurrogate() = default;
  ModularSurrogate(int vehicles, int segments, int level_count);

  int vehicles() const { return vehicles_; }
  int segments() const { return segments_; }
  int levels() const { return static_cast<int>(cost_.size()); }
  int modules() const { return module_count(vehicles_); }
  int input_dim(int module) const { return module < vehicles_ ? segments_ : 2 * segments_; }

  /// Refits one module from its records; touches no other module.
  void fit_module(int level, int module, const ModuleData& data, const FitOptions& options, std::size_t cap);

  /// Predictions of one module at a level for rows of Z (normalized inputs).
  std::vector<Prediction> predict(int level, int module, const Eigen::MatrixXd& Z) const;
  /// prob >= threshold per row; same decisions as predict, cheaper.
  std::vector<char> accepts(int level, int module, const Eigen::MatrixXd& Z, double threshold) const;

  bool informative(int level, int module) const;
  /// Trained on both classes, so it locates a decision boundary.
  bool discriminative(int level, int module) const;

  const GpcModule& base(int module) const { return base_[module]; }
  const MfModule& correction(int level, int module) const { return corrections_[level - 1][module]; }
  GpcModule& base(int module) { return base_[module]; }
  MfModule& correction(int level, int module) { return corrections_[level - 1][module]; }

  double cost(int level) const { return cost_[level]; }
  void set_cost(int level, double c) { cost_[level] = c; }

  std::uint64_t module_hash(int level, int module) const;

 private:
  int vehicles_ = 0;
  int segments_ = 0;
  std::vector<GpcModule> base_;
  std::vector<std::vector<MfModule>> corrections_;  // [level - 1][module]
  std::vector<double> cost_;
};

}  // namespace swarmopt
