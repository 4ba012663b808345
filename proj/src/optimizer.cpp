#include "swarmopt/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "json_util.hpp"
#include "swarmopt/errors.hpp"
#include "swarmopt/flatness.hpp"

namespace swarmopt {

namespace {

using detail::json;

std::vector<double> row_vector(const Allocation& x, int i) {
  std::vector<double> d(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) d[static_cast<std::size_t>(j)] = x(i, j);
  return d;
}

bool vehicle_passes_low(const PiecewiseTrajectory& traj, const CorridorProblem& problem, const Environment& env,
                        const OptimizerConfig& config) {
  if (!check_feasible_low(traj, env.quad, config.low_dt).feasible) return false;
  const int grid = config.snap.collocation * config.snap.verify_density;
  return corridor_violation(traj, problem, grid) <= config.corridor_tolerance;
}

bool vehicle_ok(const Environment& env, int i, const std::vector<double>& d, const OptimizerConfig& config) {
  const CorridorProblem problem = vehicle_problem(env, i);
  try {
    return vehicle_passes_low(min_snap(d, problem, config.weights, config.snap), problem, env, config);
  } catch (const Error&) {
    return false;
  }
}

template <class F>
void parallel_for(int n, int jobs, F&& body) {
  if (jobs <= 1 || n <= 1) {
    for (int k = 0; k < n; ++k) body(k);
    return;
  }
  const int workers = std::min(jobs, n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int k = w; k < n; k += workers) body(k);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<EvaluationRecord> evaluate_batch(const Environment& env, const std::vector<Allocation>& xs, int level,
                                             const OptimizerConfig& config) {
  std::vector<EvaluationRecord> out(xs.size());
  parallel_for(static_cast<int>(xs.size()), config.jobs,
               [&](int k) { out[static_cast<std::size_t>(k)] = evaluate(env, xs[static_cast<std::size_t>(k)], level, config); });
  return out;
}

void add_record(OptimizerState& s, EvaluationRecord rec) {
  const int V = s.dataset.vehicles;
  for (int k = 0; k < module_count(V); ++k) {
    const auto [i, j] = module_members(k, V);
    const int label = j < 0 ? rec.vehicle_labels[static_cast<std::size_t>(i)] : rec.pair_labels[static_cast<std::size_t>(k - V)];
    s.dataset.at(rec.level, k).add(s.normalizer.input(rec.x, k), label);
  }
  Incumbent& inc = s.incumbents[static_cast<std::size_t>(rec.level)];
  if (rec.feasible() && rec.makespan < inc.makespan) {
    inc.x = rec.x;
    inc.makespan = rec.makespan;
  }
  s.dirty[static_cast<std::size_t>(rec.level)] = 1;
  s.records.push_back(std::move(rec));
}

OptimizerState blank_state(const Environment& env, const OptimizerConfig& config, int levels, Initialization init) {
  OptimizerState s;
  s.levels = levels;
  s.init = std::move(init);
  s.normalizer = Normalizer{s.init.x};
  s.dataset = Dataset(env.vehicles, levels);
  s.surrogate = ModularSurrogate(env.vehicles, env.segments(), levels);
  for (int l = 0; l < levels; ++l) s.surrogate.set_cost(l, config.cost.at(static_cast<std::size_t>(l)));
  s.thresholds = config.thresholds;
  s.incumbents.assign(static_cast<std::size_t>(levels), Incumbent{});
  if (levels == 1)
    s.batch = {config.batch};
  else
    s.batch = {config.batch_low, config.batch_high};
  s.rng.seed(config.seed);
  s.dirty.assign(static_cast<std::size_t>(levels), 0);
  return s;
}

SamplingContext sampling_context(const Environment& env, const OptimizerState& s) {
  SamplingContext ctx;
  ctx.surrogate = &s.surrogate;
  ctx.level = s.levels - 1;
  ctx.normalizer = s.normalizer;
  const Incumbent& top = s.incumbents.back();
  ctx.center = top.valid() ? top.x : s.init.x;
  ctx.synced = synchronized_intervals(env.formation.segment_ends);
  return ctx;
}

void refit(const OptimizerConfig& config, OptimizerState& s) {
  const bool full = s.iteration % std::max(1, config.full_search_every) == 0;
  FitOptions options = config.fit;
  if (!full) {
    options.restarts = 1;
    options.max_iters = config.warm_iters;
  }
  bool lower_changed = false;
  for (int l = 0; l < s.levels; ++l) {
    if (!s.dirty[static_cast<std::size_t>(l)] && !lower_changed) continue;
    for (int k = 0; k < s.surrogate.modules(); ++k)
      s.surrogate.fit_module(l, k, s.dataset.at(l, k), options, config.data_cap);
    s.dirty[static_cast<std::size_t>(l)] = 0;
    lower_changed = true;
  }
}

double joint_probability(const OptimizerState& s, const Allocation& x) {
  double p = 1.0;
  for (int k = 0; k < s.surrogate.modules(); ++k) {
    Eigen::MatrixXd Z = s.normalizer.input(x, k).transpose();
    p *= s.surrogate.predict(s.levels - 1, k, Z).front().prob;
  }
  return p;
}

}  // namespace

bool EvaluationRecord::feasible() const {
  if (vehicle_labels.empty()) return false;
  for (int v : vehicle_labels)
    if (v != 1) return false;
  for (int v : pair_labels)
    if (v != 1) return false;
  return true;
}

std::vector<PiecewiseTrajectory> build_trajectories(const Environment& env, const Allocation& x,
                                                    const OptimizerConfig& config) {
  if (x.rows() != env.vehicles || x.cols() != env.segments()) throw DimensionError("allocation shape does not match the environment");
  std::vector<PiecewiseTrajectory> out;
  for (int i = 0; i < env.vehicles; ++i)
    out.push_back(min_snap(row_vector(x, i), vehicle_problem(env, i), config.weights, config.snap));
  return out;
}

EvaluationRecord evaluate(const Environment& env, const Allocation& x, int level, const OptimizerConfig& config) {
  const int V = env.vehicles;
  EvaluationRecord rec;
  rec.x = x;
  rec.level = level;
  rec.vehicle_labels.assign(static_cast<std::size_t>(V), 0);
  rec.pair_labels.assign(static_cast<std::size_t>(env.pairs()), 0);
  rec.makespan = makespan(x);
  if ((x.array() <= 0.0).any()) {
    rec.diagnostic = "non-positive segment duration";
    return rec;
  }

  std::vector<PiecewiseTrajectory> traj;
  try {
    traj = build_trajectories(env, x, config);
  } catch (const Error& e) {
    rec.diagnostic = std::string("trajectory generation failed: ") + e.what();
    return rec;
  }

  if (level == kLowFidelity) {
    for (int i = 0; i < V; ++i)
      rec.vehicle_labels[static_cast<std::size_t>(i)] = vehicle_passes_low(traj[static_cast<std::size_t>(i)], vehicle_problem(env, i), env, config);
    for (int i = 0, k = 0; i < V; ++i)
      for (int j = i + 1; j < V; ++j, ++k)
        rec.pair_labels[static_cast<std::size_t>(k)] = check_pair(traj[static_cast<std::size_t>(i)], traj[static_cast<std::size_t>(j)], env.d_min);
    return rec;
  }

  std::vector<SampledPath> tracked(static_cast<std::size_t>(V));
  for (int i = 0; i < V; ++i) {
    const HighFidelityCheck h =
        check_feasible_high(traj[static_cast<std::size_t>(i)], env.quad, env.quad.controller, config.tracking_bound, config.sim);
    rec.vehicle_labels[static_cast<std::size_t>(i)] = h.feasible;
    tracked[static_cast<std::size_t>(i)] = h.track.tracked;
    if (!h.track.completed) rec.diagnostic += "vehicle " + std::to_string(i) + " diverged; ";
  }
  for (int i = 0, k = 0; i < V; ++i)
    for (int j = i + 1; j < V; ++j, ++k)
      rec.pair_labels[static_cast<std::size_t>(k)] = check_pair(tracked[static_cast<std::size_t>(i)], tracked[static_cast<std::size_t>(j)], env.d_min);
  return rec;
}

Allocation equalize_intervals(const Allocation& x, const std::vector<std::pair<int, int>>& ranges) {
  Allocation out = x;
  const double V = static_cast<double>(x.rows());
  for (const auto& [b, e] : ranges) {
    const Eigen::VectorXd sums = x.middleCols(b, e - b).rowwise().sum();
    if ((sums.array() <= 0.0).any()) throw ValidationError("non-positive interval duration");
    const double mean = sums.sum() / V;
    for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i).segment(b, e - b) *= mean / sums(i);
  }
  return out;
}

double slow_down(const Allocation& x, const std::function<bool(const Allocation&)>& ok) {
  const Eigen::Index rows = x.rows();
  std::vector<double> flat(x.data(), x.data() + x.size());
  auto oracle = [&](const std::vector<double>& d) {
    return ok(Eigen::Map<const Allocation>(d.data(), rows, x.cols()));
  };
  return scale_to_feasible(flat, oracle, 1.0, 20.0, 1e-3).eta;
}

Initialization initialize(const Environment& env, const OptimizerConfig& config) {
  validate(env);
  const int V = env.vehicles, m = env.segments();
  Initialization init;
  init.x.resize(V, m);
  for (int i = 0; i < V; ++i) {
    const std::vector<double> d = initial_allocation(env, i, config.weights, config.snap);
    const ScaleResult s = scale_to_feasible(d, [&](const std::vector<double>& y) { return vehicle_ok(env, i, y, config); });
    init.vehicle_eta.push_back(s.eta);
    for (int j = 0; j < m; ++j) init.x(i, j) = s.durations[static_cast<std::size_t>(j)];
  }
  init.x = equalize_intervals(init.x, env.formation.intervals(m));
  init.slowdown = slow_down(init.x, [&](const Allocation& y) {
    for (int i = 0; i < V; ++i)
      if (!vehicle_ok(env, i, row_vector(y, i), config)) return false;
    return true;
  });
  init.x *= init.slowdown;
  init.makespan = makespan(init.x);
  return init;
}

OptimizerState start_single(const Environment& env, const OptimizerConfig& config) {
  OptimizerState s = blank_state(env, config, 1, initialize(env, config));
  add_record(s, evaluate(env, s.init.x, kLowFidelity, config));

  if (config.bootstrap > 0 && config.iters > 0) {
    SamplingContext ctx = sampling_context(env, s);
    SamplerOptions o = config.sampler;
    o.n_1 = o.n_2 = config.bootstrap;
    Thresholds t = s.thresholds;
    const CandidateSet boot = build_candidates(ctx, t, o, s.rng);
    std::vector<Allocation> xs(boot.candidates.begin(), boot.candidates.begin() + config.bootstrap);
    for (auto& rec : evaluate_batch(env, xs, kLowFidelity, config)) add_record(s, std::move(rec));
  }
  return s;
}

OptimizerState start_multi(const Environment& env, const OptimizerConfig& config, const RunResult& single) {
  OptimizerState s = blank_state(env, config, 2, single.init);
  s.normalizer = single.state.normalizer;
  for (const EvaluationRecord& rec : single.state.records)
    if (rec.level == kLowFidelity) add_record(s, rec);

  // the single-fidelity answer, slowed until it survives the simulator
  std::vector<EvaluationRecord> trials;
  const double eta = slow_down(single.x, [&](const Allocation& y) {
    trials.push_back(evaluate(env, y, kHighFidelity, config));
    return trials.back().feasible();
  });
  for (auto& rec : trials) add_record(s, std::move(rec));
  if (!s.incumbents[kHighFidelity].valid())
    throw NoFeasibleScaleError("slowed single-fidelity solution never passed the high-fidelity checks");
  s.warnings.push_back("single-fidelity solution slowed by " + std::to_string(eta) + " for the high-fidelity seed");
  return s;
}

void step(const Environment& env, const OptimizerConfig& config, OptimizerState& s) {
  refit(config, s);
  SamplingContext ctx = sampling_context(env, s);
  CandidateSet set = build_candidates(ctx, s.thresholds, config.sampler, s.rng);
  for (auto& w : set.warnings) s.warnings.push_back("iteration " + std::to_string(s.iteration) + ": " + w);

  std::vector<LevelPolicy> policy(static_cast<std::size_t>(s.levels));
  for (int l = 0; l < s.levels; ++l) {
    LevelPolicy& p = policy[static_cast<std::size_t>(l)];
    p.cost = config.cost.at(static_cast<std::size_t>(l));
    p.beta = config.beta.at(static_cast<std::size_t>(l));
    p.h = config.h.at(static_cast<std::size_t>(l));
    p.batch = s.batch[static_cast<std::size_t>(l)];
    const Incumbent& inc = s.incumbents[static_cast<std::size_t>(l)];
    p.reference = inc.valid() ? inc.makespan : s.init.makespan;
  }
  const std::vector<Selection> chosen = select_next(set, policy);
  const int level = chosen.empty() ? s.levels - 1 : chosen.front().level;
  std::vector<Allocation> xs;
  for (const Selection& c : chosen) xs.push_back(set.candidates[static_cast<std::size_t>(c.candidate)]);

  const double before = s.incumbents.back().makespan;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<EvaluationRecord> recs = evaluate_batch(env, xs, level, config);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (auto& rec : recs) add_record(s, std::move(rec));

  // batch adaptation: only a slow round changes anything, so runs stay reproducible on sane hardware
  const int cap = s.levels == 1 ? config.batch : (level == kLowFidelity ? config.batch_low : config.batch_high);
  int& b = s.batch[static_cast<std::size_t>(level)];
  b = seconds > config.batch_budget_s ? std::max(1, b / 2) : std::min(cap, 2 * b);

  s.thresholds.adapt(set.accept1, set.accept2);

  TraceRow row;
  row.iter = s.iteration;
  row.best_makespan = s.incumbents.back().makespan;
  row.accept_c1 = set.accept1;
  row.accept_c2 = set.accept2;
  row.batch = static_cast<int>(xs.size());
  row.level = level;
  row.wall_ms = config.record_wall ? seconds * 1e3 : 0.0;
  s.trace.push_back(row);

  if (before - s.incumbents.back().makespan > config.converge_tol) s.last_improvement = s.iteration;
  ++s.iteration;
}

RunResult run(const Environment& env, const OptimizerConfig& config, OptimizerState state,
              const std::filesystem::path& checkpoint) {
  while (state.iteration < config.iters) {
    if (state.iteration - state.last_improvement >= config.converge_window) break;
    step(env, config, state);
    if (!checkpoint.empty()) save_checkpoint(checkpoint, state);
  }

  RunResult r;
  r.init = state.init;
  r.trace = state.trace;
  r.warnings = state.warnings;
  r.level = state.levels - 1;
  const Incumbent& top = state.incumbents.back();
  if (config.iters == 0 && state.levels == 1) {
    // nothing was optimized: the answer is the initialization itself
    r.x = state.init.x;
    r.makespan = state.init.makespan;
    r.feasible = !state.records.empty() && state.records.front().feasible();
    if (!r.feasible) r.warnings.push_back("initialization is not ground-truth feasible: " + state.records.front().diagnostic);
  } else if (top.valid()) {
    r.feasible = true;
    r.x = top.x;
    r.makespan = top.makespan;
  } else {
    refit(config, state);
    double best = -1.0;
    for (const EvaluationRecord& rec : state.records) {
      if (rec.level != r.level) continue;
      const double p = joint_probability(state, rec.x);
      if (p > best) {
        best = p;
        r.x = rec.x;
      }
    }
    if (r.x.size() == 0) r.x = state.init.x;
    r.makespan = makespan(r.x);
    r.warnings.push_back("no ground-truth feasible solution found; reporting the best predicted candidate");
  }
  r.state = std::move(state);
  return r;
}

RunResult run_single(const Environment& env, const OptimizerConfig& config, const std::filesystem::path& checkpoint) {
  if (!checkpoint.empty() && std::filesystem::exists(checkpoint))
    return run(env, config, load_checkpoint(checkpoint, env, config), checkpoint);
  return run(env, config, start_single(env, config), checkpoint);
}

RunResult run_multi(const Environment& env, const OptimizerConfig& config, const std::filesystem::path& checkpoint) {
  if (!checkpoint.empty() && std::filesystem::exists(checkpoint)) {
    OptimizerState s = load_checkpoint(checkpoint, env, config);
    if (s.levels == 2) return run(env, config, std::move(s), checkpoint);
  }
  OptimizerConfig seed_config = config;
  if (config.single_iters >= 0) seed_config.iters = config.single_iters;
  const RunResult single = run_single(env, seed_config);
  return run(env, config, start_multi(env, config, single), checkpoint);
}

// ---- checkpoint --------------------------------------------------------------

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

Eigen::MatrixXd json_matrix(const json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) throw ParseError("checkpoint: ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = j[i][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json module_json(const GpcModule& m) {
  json j;
  j["status"] = static_cast<int>(m.status);
  j["X"] = matrix_json(m.X);
  j["y"] = std::vector<int>(m.y.data(), m.y.data() + m.y.size());
  j["f"] = vector_json(m.f);
  j["log_lengthscale"] = vector_json(m.log_lengthscale);
  j["log_signal"] = m.log_signal;
  j["jitter"] = m.jitter;
  return j;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const OptimizerState& s) {
  json j;
  j["version"] = kCheckpointVersion;
  j["levels"] = s.levels;
  j["iteration"] = s.iteration;
  j["last_improvement"] = s.last_improvement;
  std::ostringstream rng;
  rng << s.rng;
  j["rng"] = rng.str();
  j["thresholds"] = {{"c1", s.thresholds.c1}, {"c2", s.thresholds.c2}};
  j["batch"] = s.batch;
  j["init"] = {{"x", matrix_json(s.init.x)}, {"makespan", s.init.makespan}, {"slowdown", s.init.slowdown},
               {"vehicle_eta", s.init.vehicle_eta}};
  j["reference"] = matrix_json(s.normalizer.reference);
  json inc = json::array();
  for (const Incumbent& i : s.incumbents)
    inc.push_back(i.valid() ? json{{"x", matrix_json(i.x)}, {"makespan", i.makespan}} : json(nullptr));
  j["incumbents"] = inc;
  json recs = json::array();
  for (const EvaluationRecord& r : s.records)
    recs.push_back({{"x", matrix_json(r.x)},
                    {"level", r.level},
                    {"vehicle_labels", r.vehicle_labels},
                    {"pair_labels", r.pair_labels},
                    {"diagnostic", r.diagnostic}});
  j["records"] = recs;
  json trace = json::array();
  for (const TraceRow& t : s.trace)
    trace.push_back({t.iter, std::isfinite(t.best_makespan) ? json(t.best_makespan) : json(nullptr), t.accept_c1,
                     t.accept_c2, t.batch, t.level, t.wall_ms});
  j["trace"] = trace;
  json modules = json::array();
  for (int k = 0; k < s.surrogate.modules(); ++k) {
    json mk;
    mk["base"] = module_json(s.surrogate.base(k));
    json corr = json::array();
    for (int l = 1; l < s.levels; ++l) {
      const MfModule& c = s.surrogate.correction(l, k);
      json cj = module_json(c.delta);
      cj["rho"] = c.rho;
      cj["fallback"] = c.fallback;
      corr.push_back(cj);
    }
    mk["corrections"] = corr;
    modules.push_back(mk);
  }
  j["modules"] = modules;

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out << j.dump(1) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

OptimizerState load_checkpoint(const std::filesystem::path& path, const Environment& env,
                               const OptimizerConfig& config) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) throw ParseError("checkpoint: unsupported version");
    const int m = env.segments();
    Initialization init;
    init.x = json_matrix(j.at("init").at("x"), m);
    init.makespan = j["init"].at("makespan").get<double>();
    init.slowdown = j["init"].at("slowdown").get<double>();
    init.vehicle_eta = j["init"].at("vehicle_eta").get<std::vector<double>>();
    if (init.x.rows() != env.vehicles) throw ValidationError("checkpoint does not match the environment");

    OptimizerState s = blank_state(env, config, j.at("levels").get<int>(), init);
    s.normalizer.reference = json_matrix(j.at("reference"), m);
    for (const json& r : j.at("records")) {
      EvaluationRecord rec;
      rec.x = json_matrix(r.at("x"), m);
      rec.level = r.at("level").get<int>();
      rec.vehicle_labels = r.at("vehicle_labels").get<std::vector<int>>();
      rec.pair_labels = r.at("pair_labels").get<std::vector<int>>();
      rec.diagnostic = r.at("diagnostic").get<std::string>();
      rec.makespan = makespan(rec.x);
      add_record(s, std::move(rec));
    }
    s.iteration = j.at("iteration").get<int>();
    s.last_improvement = j.at("last_improvement").get<int>();
    std::istringstream rng(j.at("rng").get<std::string>());
    rng >> s.rng;
    s.thresholds.c1 = j.at("thresholds").at("c1").get<double>();
    s.thresholds.c2 = j["thresholds"].at("c2").get<double>();
    s.batch = j.at("batch").get<std::vector<int>>();
    for (const json& t : j.at("trace")) {
      TraceRow row;
      row.iter = t[0].get<int>();
      row.best_makespan = t[1].is_null() ? std::numeric_limits<double>::infinity() : t[1].get<double>();
      row.accept_c1 = t[2].get<double>();
      row.accept_c2 = t[3].get<double>();
      row.batch = t[4].get<int>();
      row.level = t[5].get<int>();
      row.wall_ms = t[6].get<double>();
      s.trace.push_back(row);
    }
    // hyperparameters become warm starts for the first refit
    const json& modules = j.at("modules");
    for (int k = 0; k < s.surrogate.modules() && k < static_cast<int>(modules.size()); ++k) {
      GpcModule& b = s.surrogate.base(k);
      const json& bj = modules[static_cast<std::size_t>(k)].at("base");
      const auto ll = bj.at("log_lengthscale").get<std::vector<double>>();
      if (static_cast<int>(ll.size()) != b.dim) throw ParseError("checkpoint: module dimension mismatch");
      b.log_lengthscale = Eigen::Map<const Eigen::VectorXd>(ll.data(), b.dim);
      b.log_signal = bj.at("log_signal").get<double>();
      if (bj.at("status").get<int>() == static_cast<int>(GpcModule::Status::Fitted)) b.status = GpcModule::Status::Fitted;
    }
    return s;
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace swarmopt
