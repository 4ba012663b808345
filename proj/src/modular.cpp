#include "swarmopt/modular.hpp"

#include <string>

#include "swarmopt/errors.hpp"

namespace swarmopt {

int module_count(int vehicles) { return vehicles + vehicles * (vehicles - 1) / 2; }

int pair_module(int i, int j, int vehicles) {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= vehicles || i == j) throw DimensionError("pair_module: invalid pair");
  // Pairs with first index below i come first.
  return vehicles + i * vehicles - i * (i + 1) / 2 + (j - i - 1);
}

std::pair<int, int> module_members(int module, int vehicles) {
  if (module < vehicles) return {module, -1};
  int k = module - vehicles;
  for (int i = 0; i < vehicles; ++i) {
    const int row = vehicles - i - 1;
    if (k < row) return {i, i + 1 + k};
    k -= row;
  }
  throw DimensionError("module_members: index out of range");
}

Eigen::VectorXd Normalizer::vehicle(const Allocation& x, int i) const {
  return (x.row(i).array() / reference.row(i).array()).matrix().transpose();
}

Eigen::VectorXd Normalizer::pair(const Allocation& x, int i, int j) const {
  const Eigen::Index m = x.cols();
  Eigen::VectorXd z(2 * m);
  z.head(m) = vehicle(x, i);
  z.tail(m) = vehicle(x, j);
  return z;
}

Eigen::VectorXd Normalizer::input(const Allocation& x, int module) const {
  const auto [i, j] = module_members(module, static_cast<int>(x.rows()));
  return j < 0 ? vehicle(x, i) : pair(x, i, j);
}

Allocation Normalizer::normalize(const Allocation& x) const { return x.array() / reference.array(); }

Allocation Normalizer::denormalize(const Allocation& z) const { return z.array() * reference.array(); }

void ModuleData::add(const Eigen::VectorXd& z, int label) {
  if (label != 0 && label != 1) throw ValidationError("dataset labels must be 0 or 1");
  if (!inputs.empty() && inputs.front().size() != z.size())
    throw DimensionError("dataset record has dimension " + std::to_string(z.size()) + ", expected " +
                         std::to_string(inputs.front().size()));
  inputs.push_back(z);
  labels.push_back(label);
}

void ModuleData::recent(std::size_t cap, Eigen::MatrixXd& X, Eigen::VectorXi& y) const {
  const std::size_t n = cap == 0 ? size() : std::min(cap, size());
  const std::size_t first = size() - n;
  const Eigen::Index d = inputs.empty() ? 0 : inputs.front().size();
  X.resize(static_cast<Eigen::Index>(n), d);
  y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    X.row(static_cast<Eigen::Index>(r)) = inputs[first + r].transpose();
    y(static_cast<Eigen::Index>(r)) = labels[first + r];
  }
}

Dataset::Dataset(int vehicle_count, int level_count)
    : vehicles(vehicle_count),
      levels(static_cast<std::size_t>(level_count), std::vector<ModuleData>(static_cast<std::size_t>(module_count(vehicle_count)))) {}

ModularSurrogate::ModularSurrogate(int vehicles, int segments, int level_count)
    : vehicles_(vehicles), segments_(segments), cost_(static_cast<std::size_t>(level_count), 1.0) {
  if (level_count < 1) throw ValidationError("surrogate needs at least one fidelity level");
  for (int k = 0; k < modules(); ++k) base_.emplace_back(input_dim(k));
  corrections_.resize(static_cast<std::size_t>(level_count - 1));
  for (auto& level : corrections_)
    for (int k = 0; k < modules(); ++k) {
      MfModule m;
      m.delta = GpcModule(input_dim(k));
      level.push_back(m);
    }
}

void ModularSurrogate::fit_module(int level, int module, const ModuleData& data, const FitOptions& options,
                                  std::size_t cap) {
  Eigen::MatrixXd X;
  Eigen::VectorXi y;
  data.recent(cap, X, y);
  if (X.rows() > 0 && X.cols() != input_dim(module)) throw DimensionError("fit_module: record dimension mismatch");
  if (X.rows() == 0) X.resize(0, input_dim(module));
  if (level == 0) {
    GpcModule& m = base_[static_cast<std::size_t>(module)];
    const bool warm = m.status == GpcModule::Status::Fitted;
    m = fit(X, y, options, warm ? &m : nullptr);
    return;
  }
  if (level > 1) throw ValidationError("only two fidelity levels are supported");
  MfModule& c = correction(level, module);
  const MfModule previous = c;
  c = fit_mf(base_[static_cast<std::size_t>(module)], X, y, options, previous.fallback ? nullptr : &previous);
}

std::vector<Prediction> ModularSurrogate::predict(int level, int module, const Eigen::MatrixXd& Z) const {
  const GpcModule& low = base_[static_cast<std::size_t>(module)];
  if (level == 0) return low.predict_batch(Z);
  return predict_mf_batch(low, correction(level, module), Z);
}

std::vector<char> ModularSurrogate::accepts(int level, int module, const Eigen::MatrixXd& Z, double threshold) const {
  const GpcModule& low = base_[static_cast<std::size_t>(module)];
  if (level == 0 || correction(level, module).fallback) return low.accepts(Z, threshold);
  std::vector<char> out;
  for (const Prediction& p : predict(level, module, Z)) out.push_back(p.prob >= threshold);
  return out;
}

bool ModularSurrogate::informative(int level, int module) const {
  const GpcModule& low = base_[static_cast<std::size_t>(module)];
  if (level == 0) return low.informative();
  const MfModule& c = correction(level, module);
  return low.informative() || (!c.fallback && c.delta.informative());
}

bool ModularSurrogate::discriminative(int level, int module) const {
  const bool low = base_[static_cast<std::size_t>(module)].status == GpcModule::Status::Fitted;
  if (level == 0) return low;
  const MfModule& c = correction(level, module);
  return low || (!c.fallback && c.delta.status == GpcModule::Status::Fitted);
}

std::uint64_t ModularSurrogate::module_hash(int level, int module) const {
  if (level == 0) return base_[static_cast<std::size_t>(module)].state_hash();
  const MfModule& c = correction(level, module);
  std::uint64_t h = c.delta.state_hash();
  h ^= std::hash<double>{}(c.rho) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h ^ (c.fallback ? 0x5555ull : 0ull);
}

}  // namespace swarmopt
