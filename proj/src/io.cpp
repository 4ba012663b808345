#include "swarmopt/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "swarmopt/errors.hpp"
#include "swarmopt/flatness.hpp"

namespace swarmopt {

namespace {

using detail::json;

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json report_json(const VerificationReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"constraint", c.constraint}, {"subject", c.subject}, {"margin", c.margin}, {"passed", c.passed}});
  return {{"passed", r.passed}, {"checks", checks}};
}

// Horizontal section of a polytope at height z, clipped from a large square.
std::vector<Eigen::Vector2d> section(const Polytope& poly, double z) {
  std::vector<Eigen::Vector2d> pts{{-1e4, -1e4}, {1e4, -1e4}, {1e4, 1e4}, {-1e4, 1e4}};
  for (int f = 0; f < poly.faces() && !pts.empty(); ++f) {
    const Eigen::Vector2d a = poly.A.row(f).head<2>().transpose();
    const double c = poly.b(f) - poly.A(f, 2) * z;
    if (a.norm() < 1e-9) {
      if (c < 0) pts.clear();
      continue;
    }
    std::vector<Eigen::Vector2d> next;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const Eigen::Vector2d& p = pts[k];
      const Eigen::Vector2d& q = pts[(k + 1) % pts.size()];
      const double fp = a.dot(p) - c, fq = a.dot(q) - c;
      if (fp <= 0) next.push_back(p);
      if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) next.push_back(p + (q - p) * (fp / (fp - fq)));
    }
    pts = std::move(next);
  }
  return pts;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

template <class T>
void set_if(const json& j, const char* key, T& target) {
  target = detail::get_or<T>(j, key, target);
}

void set_pair(const json& j, const char* key, std::vector<double>& target) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    target = it->get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("config key '") + key + "': " + e.what());
  }
  if (target.size() != 2) throw ParseError(std::string("config key '") + key + "': expected one value per fidelity level (2)");
}

}  // namespace

void write_solution(const std::filesystem::path& path, const Solution& s) {
  json j;
  j["method"] = s.method;
  j["fidelity"] = s.fidelity;
  j["level"] = s.level;
  j["feasible"] = s.feasible;
  j["makespan"] = s.makespan;
  j["init_makespan"] = s.init_makespan;
  j["seed"] = s.seed;
  j["iterations"] = s.iterations;
  json rows = json::array();
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < s.x.cols(); ++k) r.push_back(s.x(i, k));
    rows.push_back(r);
  }
  j["allocation"] = rows;
  j["warnings"] = s.warnings;
  if (s.report) j["verification"] = report_json(*s.report);
  open_out(path) << j.dump(2) << "\n";
}

Solution read_solution(const std::filesystem::path& path) {
  const std::string text = slurp(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError(path.string() + ": expected a JSON object");
  const std::string where = path.string();
  Solution s;
  s.method = detail::get_or<std::string>(j, "method", "mbo");
  if (s.method != "mbo" && s.method != "formation") throw ParseError(where + ": unknown method '" + s.method + "'");
  s.fidelity = detail::get_or<std::string>(j, "fidelity", "low");
  s.level = detail::get_or<int>(j, "level", kLowFidelity);
  s.feasible = detail::get_or<bool>(j, "feasible", false);
  s.makespan = detail::get_or<double>(j, "makespan", 0.0);
  s.init_makespan = detail::get_or<double>(j, "init_makespan", 0.0);
  s.seed = detail::get_or<std::uint64_t>(j, "seed", 0);
  s.iterations = detail::get_or<int>(j, "iterations", 0);
  s.warnings = detail::get_or<std::vector<std::string>>(j, "warnings", {});
  const json& rows = detail::require(j, "allocation", where);
  if (!rows.is_array() || rows.empty() || !rows[0].is_array() || rows[0].empty())
    throw ParseError(where + ": allocation must be a non-empty matrix");
  s.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw ParseError(where + ": ragged allocation");
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      if (!rows[i][k].is_number()) throw ParseError(where + ": allocation entries must be numbers");
      s.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k].get<double>();
    }
  }
  if (!(s.x.array() > 0.0).all()) throw ParseError(where + ": durations must be positive");
  if (auto it = j.find("verification"); it != j.end() && it->is_object()) {
    VerificationReport r;
    try {
      for (const json& c : it->at("checks"))
        r.add({c.at("constraint").get<std::string>(), c.at("subject").get<std::string>(), c.at("margin").get<double>(),
               c.at("passed").get<bool>()});
    } catch (const json::exception& e) {
      throw ParseError(where + ": verification: " + e.what());
    }
    s.report = r;
  }
  return s;
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<const FlatTrajectory*>& trajectories,
                          double dt) {
  std::ofstream out = open_out(path);
  out << "vehicle,t,x,y,z,yaw\n";
  for (std::size_t i = 0; i < trajectories.size(); ++i)
    for (double t : sample_times(trajectories[i]->duration(), dt)) {
      const FlatOutput f = trajectories[i]->sample(t);
      out << i << ',' << num(t) << ',' << num(f.position.x()) << ',' << num(f.position.y()) << ','
          << num(f.position.z()) << ',' << num(f.yaw) << '\n';
    }
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
  std::ofstream out = open_out(path);
  out << "iter,best_makespan_s,accept_rate_c1,accept_rate_c2,batch,level,wall_ms\n";
  auto rate = [](double r) { return r < 0 ? std::string() : num(r); };
  for (const TraceRow& r : trace)
    out << r.iter << ',' << num(r.best_makespan) << ',' << rate(r.accept_c1) << ',' << rate(r.accept_c2) << ','
        << r.batch << ',' << r.level << ',' << num(r.wall_ms) << '\n';
}

void write_plot_svg(const std::filesystem::path& path, const Environment& env,
                    const std::vector<const FlatTrajectory*>& trajectories) {
  double z = 0.0;
  for (const Pose& p : env.starts) z += p.position.z();
  z /= std::max(1, env.vehicles);

  std::vector<std::vector<Eigen::Vector2d>> polys;
  for (const auto& corridor : env.corridors)
    for (const Polytope& p : corridor) polys.push_back(section(p, z));
  std::vector<std::vector<Eigen::Vector2d>> paths;
  for (const FlatTrajectory* t : trajectories) {
    std::vector<Eigen::Vector2d> pts;
    for (double s : sample_times(t->duration(), 0.02)) pts.push_back(t->position(s).head<2>());
    paths.push_back(std::move(pts));
  }

  Eigen::Vector2d lo = Eigen::Vector2d::Constant(1e300), hi = -lo;
  auto grow = [&](const Eigen::Vector2d& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  for (const auto& poly : polys)
    for (const auto& p : poly) grow(p);
  for (const auto& path : paths)
    for (const auto& p : path) grow(p);
  if (!(lo.x() <= hi.x())) lo = hi = Eigen::Vector2d::Zero();
  lo.array() -= 0.5;
  hi.array() += 0.5;
  const double scale = 800.0 / std::max(hi.x() - lo.x(), hi.y() - lo.y());
  auto px = [&](const Eigen::Vector2d& p) {
    return num((p.x() - lo.x()) * scale) + "," + num((hi.y() - p.y()) * scale);
  };

  std::ofstream out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num((hi.x() - lo.x()) * scale) << "\" height=\""
      << num((hi.y() - lo.y()) * scale) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& poly : polys) {
    if (poly.size() < 3) continue;
    out << "<polygon fill=\"#eeeeee\" fill-opacity=\"0.6\" stroke=\"#999999\" stroke-width=\"1\" points=\"";
    for (const auto& p : poly) out << px(p) << ' ';
    out << "\"/>\n";
  }
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const char* color = kColors[i % (sizeof kColors / sizeof *kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : paths[i]) out << px(p) << ' ';
    out << "\"/>\n";
    const double r = 0.5 * env.d_min * scale;
    for (const Pose& w : env.formation.waypoints.at(i)) {
      const std::string c = px(w.position.head<2>());
      const auto comma = c.find(',');
      out << "<circle cx=\"" << c.substr(0, comma) << "\" cy=\"" << c.substr(comma + 1) << "\" r=\"" << num(r)
          << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    }
  }
  out << "</svg>\n";
}

void write_comparison_csv(const std::filesystem::path& path, double baseline, double mbo) {
  std::ofstream out = open_out(path);
  out << "makespan_baseline,makespan_mbo,ratio\n" << num(baseline) << ',' << num(mbo) << ',' << num(baseline / mbo) << '\n';
}

OptimizerConfig parse_config(std::string_view text, OptimizerConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  static const char* known[] = {"iters", "single_iters", "batch", "batch_low", "batch_high", "bootstrap", "seed", "cost", "h", "beta",
                                "threshold_init", "target_acceptance", "n_s", "n_1", "n_2", "sigma_pert",
                                "starvation_rounds", "full_search_every", "warm_iters", "data_cap", "converge_window",
                                "converge_tol", "batch_budget_s", "record_wall", "mu_r", "mu_psi", "collocation",
                                "verify_density", "qp_corridor_tolerance", "refine_rounds", "qp_regularization",
                                "low_dt", "tracking_bound", "sim_rate_hz", "sim_sample_hz", "corridor_tolerance",
                                "jobs"};
  for (const auto& [key, value] : j.items())
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
      throw ParseError("config: unknown key '" + key + "'");

  set_if(j, "iters", c.iters);
  set_if(j, "single_iters", c.single_iters);
  set_if(j, "batch", c.batch);
  set_if(j, "batch_low", c.batch_low);
  set_if(j, "batch_high", c.batch_high);
  set_if(j, "bootstrap", c.bootstrap);
  set_if(j, "seed", c.seed);
  set_pair(j, "cost", c.cost);
  set_pair(j, "h", c.h);
  set_pair(j, "beta", c.beta);
  if (j.contains("threshold_init")) c.thresholds.c1 = c.thresholds.c2 = detail::get_or<double>(j, "threshold_init", 0.8);
  set_if(j, "target_acceptance", c.thresholds.target);
  set_if(j, "n_s", c.sampler.n_s);
  set_if(j, "n_1", c.sampler.n_1);
  set_if(j, "n_2", c.sampler.n_2);
  set_if(j, "sigma_pert", c.sampler.sigma);
  set_if(j, "starvation_rounds", c.sampler.starvation_rounds);
  set_if(j, "full_search_every", c.full_search_every);
  set_if(j, "warm_iters", c.warm_iters);
  set_if(j, "data_cap", c.data_cap);
  set_if(j, "converge_window", c.converge_window);
  set_if(j, "converge_tol", c.converge_tol);
  set_if(j, "batch_budget_s", c.batch_budget_s);
  set_if(j, "record_wall", c.record_wall);
  set_if(j, "mu_r", c.weights.position);
  set_if(j, "mu_psi", c.weights.yaw);
  set_if(j, "collocation", c.snap.collocation);
  set_if(j, "verify_density", c.snap.verify_density);
  set_if(j, "qp_corridor_tolerance", c.snap.corridor_tolerance);
  set_if(j, "refine_rounds", c.snap.refine_rounds);
  set_if(j, "qp_regularization", c.snap.regularization);
  set_if(j, "low_dt", c.low_dt);
  set_if(j, "tracking_bound", c.tracking_bound);
  set_if(j, "sim_rate_hz", c.sim.rate_hz);
  set_if(j, "sim_sample_hz", c.sim.sample_hz);
  set_if(j, "corridor_tolerance", c.corridor_tolerance);
  set_if(j, "jobs", c.jobs);

  auto check = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("config: ") + what);
  };
  check(c.iters >= 0, "iters must be >= 0");
  check(c.batch >= 1 && c.batch_low >= 1 && c.batch_high >= 1, "batch sizes must be >= 1");
  check(c.bootstrap >= 0, "bootstrap must be >= 0");
  for (double v : c.cost) check(v > 0, "cost must be positive");
  for (double v : c.h) check(v >= 0 && v < 1, "h must lie in [0, 1)");
  for (double v : c.beta) check(v >= 0, "beta must be >= 0");
  check(c.thresholds.c1 >= kThresholdMin && c.thresholds.c1 <= kThresholdMax, "threshold_init must lie in [1e-4, 0.999]");
  check(c.thresholds.target > 0 && c.thresholds.target < 1, "target_acceptance must lie in (0, 1)");
  check(c.sampler.n_s >= 1 && c.sampler.n_1 >= 1 && c.sampler.n_2 >= 1, "n_s, n_1, n_2 must be >= 1");
  check(c.sampler.sigma > 0, "sigma_pert must be positive");
  check(c.weights.position > 0 && c.weights.yaw >= 0, "mu_r must be positive and mu_psi nonnegative");
  check(c.snap.collocation >= 2 && c.snap.verify_density >= 1, "collocation must be >= 2");
  check(c.low_dt > 0 && c.tracking_bound > 0 && c.sim.rate_hz > 0 && c.sim.sample_hz > 0, "time steps and bounds must be positive");
  check(c.jobs >= 1, "jobs must be >= 1");
  check(c.full_search_every >= 1 && c.data_cap >= 2, "full_search_every must be >= 1 and data_cap >= 2");
  return c;
}

OptimizerConfig load_config(const std::filesystem::path& path, OptimizerConfig base) {
  return parse_config(slurp(path), std::move(base));
}

VerifyOptions verify_options(const OptimizerConfig& config, bool high_fidelity) {
  VerifyOptions v;
  v.high_fidelity = high_fidelity;
  v.tracking_bound = config.tracking_bound;
  v.sim = config.sim;
  v.corridor_tolerance = std::max(v.corridor_tolerance, 10 * config.corridor_tolerance);
  return v;
}

}  // namespace swarmopt
