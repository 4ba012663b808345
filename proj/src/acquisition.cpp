#include "swarmopt/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

#include "swarmopt/errors.hpp"

namespace swarmopt {

void Thresholds::adapt(double rate1, double rate2) {
  auto move = [&](double& c, double rate) {
    if (rate < 0.0) return;
    if (rate < target)
      c *= 1.0 - step;
    else if (rate > target)
      c *= 1.0 + step;
    c = std::clamp(c, kThresholdMin, kThresholdMax);
  };
  move(c1, rate1);
  move(c2, rate2);
}

std::vector<std::pair<int, int>> synchronized_intervals(const std::vector<int>& segment_ends) {
  std::vector<std::pair<int, int>> out;
  int begin = 0;
  for (int e : segment_ends) {
    if (e <= begin) throw ValidationError("formation segment ends must increase");
    out.emplace_back(begin, e);
    begin = e;
  }
  return out;
}

Eigen::VectorXd interval_sums(const Allocation& x, int i, const std::vector<std::pair<int, int>>& ranges) {
  Eigen::VectorXd s(static_cast<Eigen::Index>(ranges.size()));
  for (std::size_t k = 0; k < ranges.size(); ++k)
    s(static_cast<Eigen::Index>(k)) = x.row(i).segment(ranges[k].first, ranges[k].second - ranges[k].first).sum();
  return s;
}

Allocation rescale_intervals(const Allocation& x, const Eigen::VectorXd& targets,
                             const std::vector<std::pair<int, int>>& ranges) {
  if (targets.size() != static_cast<Eigen::Index>(ranges.size())) throw DimensionError("interval target count");
  Allocation out = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 0; k < ranges.size(); ++k) {
      const int b = ranges[k].first, n = ranges[k].second - ranges[k].first;
      const double s = x.row(i).segment(b, n).sum();
      if (!(s > 0.0)) throw ValidationError("non-positive interval duration");
      out.row(i).segment(b, n) *= targets(static_cast<Eigen::Index>(k)) / s;
    }
  }
  return out;
}

double synchronization_error(const Allocation& x, const Eigen::VectorXd& targets,
                             const std::vector<std::pair<int, int>>& ranges) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    worst = std::max(worst, (interval_sums(x, static_cast<int>(i), ranges) - targets).cwiseAbs().maxCoeff());
  return ranges.empty() ? 0.0 : worst;
}

Eigen::RowVectorXd perturb_row(const Eigen::RowVectorXd& center, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  const Eigen::Index m = center.size();
  Eigen::RowVectorXd e(m);
  for (Eigen::Index j = 0; j < m; ++j) e(j) = normal(rng);
  // neighbouring segments move together; a jagged allocation is rarely useful
  Eigen::RowVectorXd smooth(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index a = std::max<Eigen::Index>(0, j - 1), b = std::min<Eigen::Index>(m - 1, j + 1);
    smooth(j) = e.segment(a, b - a + 1).mean();
  }
  return center.array() * smooth.array().exp();
}

namespace {

struct Starvation {
  int zero_rounds = 0;
  bool disabled = false;

  // Relaxes the threshold after too many fruitless rounds in a row.
  void fruitless(double& c, int limit, const char* name, std::vector<std::string>& warnings) {
    if (disabled || ++zero_rounds < limit) return;
    zero_rounds = 0;
    std::ostringstream msg;
    if (c <= kThresholdMin) {
      disabled = true;
      msg << name << " filter disabled after " << limit << " rounds without acceptance at the floor";
    } else {
      c = std::max(kThresholdMin, 0.5 * c);
      msg << name << " threshold halved to " << c << " after " << limit << " rounds without acceptance";
    }
    warnings.push_back(msg.str());
  }
};

Eigen::MatrixXd normalized_rows(const std::vector<Eigen::RowVectorXd>& rows, const Eigen::RowVectorXd& ref) {
  Eigen::MatrixXd Z(static_cast<Eigen::Index>(rows.size()), ref.size());
  for (std::size_t r = 0; r < rows.size(); ++r) Z.row(static_cast<Eigen::Index>(r)) = rows[r].cwiseQuotient(ref);
  return Z;
}

}  // namespace

std::vector<Eigen::RowVectorXd> sample_traj(int vehicle, const Eigen::VectorXd& xf, const SamplingContext& ctx,
                                            Thresholds& thresholds, const SamplerOptions& options,
                                            std::mt19937_64& rng, SampleStats& stats) {
  if (!ctx.surrogate) throw ValidationError("sampling context without surrogate");
  const Eigen::RowVectorXd center = ctx.center.row(vehicle);
  const Eigen::RowVectorXd ref = ctx.normalizer.reference.row(vehicle);
  const bool filter = ctx.surrogate->discriminative(ctx.level, vehicle);

  std::vector<Eigen::RowVectorXd> accepted;
  Starvation starve;
  for (int round = 0; static_cast<int>(accepted.size()) < options.n_1; ++round) {
    if (round >= options.max_rounds) throw InfeasibleError("per-vehicle sampling exceeded its round limit");
    std::vector<Eigen::RowVectorXd> draws;
    draws.reserve(static_cast<std::size_t>(options.n_s));
    for (int s = 0; s < options.n_s; ++s) {
      Allocation row = perturb_row(center, options.sigma, rng);
      if (!ctx.synced.empty()) row = rescale_intervals(row, xf, ctx.synced);
      draws.push_back(row.row(0));
    }
    std::vector<char> pass;
    const bool apply = filter && !starve.disabled;
    if (apply) pass = ctx.surrogate->accepts(ctx.level, vehicle, normalized_rows(draws, ref), thresholds.c1);

    int kept = 0;
    for (std::size_t s = 0; s < draws.size() && static_cast<int>(accepted.size()) < options.n_1; ++s) {
      ++stats.drawn;
      if (apply && !pass[s]) continue;
      ++stats.accepted;
      ++kept;
      accepted.push_back(draws[s]);
    }
    if (kept == 0) starve.fruitless(thresholds.c1, options.starvation_rounds, "C1", stats.warnings);
    else starve.zero_rounds = 0;
  }
  return accepted;
}

double makespan(const Allocation& x) { return x.rowwise().sum().maxCoeff(); }

void predict_candidates(const ModularSurrogate& surrogate, const Normalizer& normalizer, CandidateSet& set) {
  const int L = surrogate.levels(), M = surrogate.modules();
  set.predictions.assign(static_cast<std::size_t>(L), std::vector<std::vector<Prediction>>(static_cast<std::size_t>(M)));
  if (set.candidates.empty()) return;
  for (int m = 0; m < M; ++m) {
    Eigen::MatrixXd Z(set.size(), surrogate.input_dim(m));
    for (int c = 0; c < set.size(); ++c) Z.row(c) = normalizer.input(set.candidates[static_cast<std::size_t>(c)], m).transpose();
    for (int l = 0; l < L; ++l) set.predictions[static_cast<std::size_t>(l)][static_cast<std::size_t>(m)] = surrogate.predict(l, m, Z);
  }
}

CandidateSet build_candidates(const SamplingContext& ctx, Thresholds& thresholds, const SamplerOptions& options,
                              std::mt19937_64& rng) {
  if (!ctx.surrogate) throw ValidationError("sampling context without surrogate");
  const ModularSurrogate& sur = *ctx.surrogate;
  const int V = sur.vehicles();
  if (ctx.center.rows() != V || ctx.center.cols() != sur.segments()) throw DimensionError("center allocation shape");

  CandidateSet set;
  SampleStats stats1;
  long tested2 = 0, accepted2 = 0;
  Starvation starve2;
  std::normal_distribution<double> normal(0.0, options.sigma);
  const Eigen::VectorXd base_sums = interval_sums(ctx.center, 0, ctx.synced);

  for (int round = 0; set.size() < options.n_2; ++round) {
    if (round >= options.max_rounds) throw InfeasibleError("joint sampling exceeded its round limit");
    Eigen::VectorXd xf = base_sums;
    for (Eigen::Index k = 0; k < xf.size(); ++k) xf(k) *= std::exp(normal(rng));

    std::vector<std::vector<Eigen::RowVectorXd>> survivors(static_cast<std::size_t>(V));
    for (int v = 0; v < V; ++v) survivors[static_cast<std::size_t>(v)] = sample_traj(v, xf, ctx, thresholds, options, rng, stats1);

    const std::size_t need = static_cast<std::size_t>(options.n_2 - set.size());
    std::vector<std::vector<int>> partial;
    const std::size_t first_cap = V == 1 ? need : static_cast<std::size_t>(options.n_2);
    for (std::size_t r = 0; r < survivors[0].size() && partial.size() < first_cap; ++r) partial.push_back({static_cast<int>(r)});

    bool fruitless = false;
    for (int v = 1; v < V && !partial.empty(); ++v) {
      const auto& pool = survivors[static_cast<std::size_t>(v)];
      const std::size_t cap = v == V - 1 ? need : static_cast<std::size_t>(options.n_2);
      const std::size_t budget = 4 * static_cast<std::size_t>(options.n_2);
      std::vector<int> checks;
      for (int u = 0; u < v; ++u)
        if (!starve2.disabled && sur.discriminative(ctx.level, pair_module(u, v, V))) checks.push_back(u);

      std::vector<std::uint64_t> order(partial.size() * pool.size());
      std::iota(order.begin(), order.end(), std::uint64_t{0});
      std::shuffle(order.begin(), order.end(), rng);

      std::vector<std::vector<int>> next;
      std::size_t pos = 0;
      long stage_tested = 0;
      const std::size_t chunk = 512;
      while (pos < order.size() && next.size() < cap && (checks.empty() || pos < budget)) {
        const std::size_t end = std::min(order.size(), pos + chunk);
        std::vector<char> ok(end - pos, 1);
        for (int u : checks) {
          const int m = pair_module(u, v, V);
          const int n = sur.segments();
          Eigen::MatrixXd Z(static_cast<Eigen::Index>(end - pos), 2 * n);
          for (std::size_t t = pos; t < end; ++t) {
            const auto& tuple = partial[order[t] / pool.size()];
            const auto& row_u = survivors[static_cast<std::size_t>(u)][static_cast<std::size_t>(tuple[static_cast<std::size_t>(u)])];
            const auto& row_v = pool[order[t] % pool.size()];
            const Eigen::Index r = static_cast<Eigen::Index>(t - pos);
            Z.row(r).head(n) = row_u.cwiseQuotient(ctx.normalizer.reference.row(u));
            Z.row(r).tail(n) = row_v.cwiseQuotient(ctx.normalizer.reference.row(v));
          }
          const auto pass = sur.accepts(ctx.level, m, Z, thresholds.c2);
          for (std::size_t t = 0; t < pass.size(); ++t)
            if (!pass[t]) ok[t] = 0;
        }
        for (std::size_t t = pos; t < end && next.size() < cap; ++t) {
          if (!checks.empty()) ++stage_tested;
          if (!ok[t - pos]) continue;
          if (!checks.empty()) ++accepted2;
          auto tuple = partial[order[t] / pool.size()];
          tuple.push_back(static_cast<int>(order[t] % pool.size()));
          next.push_back(std::move(tuple));
        }
        pos = end;
      }
      tested2 += stage_tested;
      if (next.empty()) fruitless = true;
      partial = std::move(next);
    }

    if (fruitless) {
      starve2.fruitless(thresholds.c2, options.starvation_rounds, "C2", set.warnings);
      continue;
    }
    starve2.zero_rounds = 0;
    for (const auto& tuple : partial) {
      Allocation x(V, sur.segments());
      for (int v = 0; v < V; ++v)
        x.row(v) = survivors[static_cast<std::size_t>(v)][static_cast<std::size_t>(tuple[static_cast<std::size_t>(v)])];
      set.candidates.push_back(std::move(x));
      set.formation.push_back(xf);
    }
  }

  set.accept1 = stats1.drawn > 0 ? static_cast<double>(stats1.accepted) / static_cast<double>(stats1.drawn) : -1.0;
  set.accept2 = tested2 > 0 ? static_cast<double>(accepted2) / static_cast<double>(tested2) : -1.0;
  set.warnings.insert(set.warnings.begin(), stats1.warnings.begin(), stats1.warnings.end());
  predict_candidates(sur, ctx.normalizer, set);
  return set;
}

double alpha_explore(const std::vector<Prediction>& modules) {
  double a = 0.0;
  for (const auto& p : modules) a -= std::abs(p.mean) / std::max(p.stddev, kSigmaFloor);
  return a;
}

double alpha_exploit(double reference_makespan, double candidate_makespan, const std::vector<Prediction>& modules,
                     double beta, double h) {
  const double gain = reference_makespan - candidate_makespan;
  if (!(gain > 0.0)) return 0.0;
  double prod = 1.0;
  for (const auto& p : modules) {
    const double pt = variance_penalized_prob(p, beta);
    if (pt < h) return 0.0;
    prod *= pt;
  }
  return gain * prod;
}

std::vector<Selection> select_next(const CandidateSet& set, const std::vector<LevelPolicy>& levels) {
  const int L = static_cast<int>(levels.size());
  if (static_cast<int>(set.predictions.size()) != L) throw DimensionError("level policy count");
  const int N = set.size();
  if (N == 0) return {};
  const int M = static_cast<int>(set.predictions.front().size());

  struct Entry {
    int c, l;
    double exploit, explore;
    bool gated;  // every penalized probability >= h
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(N * L));
  std::vector<Prediction> mods(static_cast<std::size_t>(M));
  bool any_exploit = false;
  for (int c = 0; c < N; ++c) {
    const double T = makespan(set.candidates[static_cast<std::size_t>(c)]);
    for (int l = 0; l < L; ++l) {
      const LevelPolicy& pol = levels[static_cast<std::size_t>(l)];
      bool gated = true;
      for (int m = 0; m < M; ++m) {
        mods[static_cast<std::size_t>(m)] = set.predictions[static_cast<std::size_t>(l)][static_cast<std::size_t>(m)][static_cast<std::size_t>(c)];
        if (variance_penalized_prob(mods[static_cast<std::size_t>(m)], pol.beta) < pol.h) gated = false;
      }
      Entry e{c, l, alpha_exploit(pol.reference, T, mods, pol.beta, pol.h) / pol.cost, alpha_explore(mods) * pol.cost, gated};
      any_exploit = any_exploit || e.exploit > 0.0;
      entries.push_back(e);
    }
  }

  auto by_exploit = [](const Entry& a, const Entry& b) {
    if (a.exploit != b.exploit) return a.exploit > b.exploit;
    return a.c != b.c ? a.c < b.c : a.l < b.l;
  };
  auto by_explore = [](const Entry& a, const Entry& b) {
    if (a.explore != b.explore) return a.explore > b.explore;
    return a.c != b.c ? a.c < b.c : a.l < b.l;
  };

  std::vector<Selection> out;
  std::vector<const Allocation*> chosen;
  auto take = [&](const Entry& e, bool exploit, int batch) {
    if (static_cast<int>(out.size()) >= batch) return;
    const Allocation& x = set.candidates[static_cast<std::size_t>(e.c)];
    for (const Allocation* y : chosen)
      if (*y == x) return;
    chosen.push_back(&x);
    out.push_back({e.c, e.l, exploit ? e.exploit : e.explore, exploit});
  };

  if (any_exploit) {
    std::sort(entries.begin(), entries.end(), by_exploit);
    const int level = entries.front().l;
    const int batch = levels[static_cast<std::size_t>(level)].batch;
    for (const auto& e : entries)
      if (e.l == level && e.exploit > 0.0) take(e, true, batch);
    if (static_cast<int>(out.size()) < batch) {
      std::sort(entries.begin(), entries.end(), by_explore);
      for (const auto& e : entries)
        if (e.l == level && e.gated) take(e, false, batch);
    }
  } else {
    std::sort(entries.begin(), entries.end(), by_explore);
    const int level = entries.front().l;
    const int batch = levels[static_cast<std::size_t>(level)].batch;
    for (const auto& e : entries)
      if (e.l == level) take(e, false, batch);
  }
  return out;
}

}  // namespace swarmopt
