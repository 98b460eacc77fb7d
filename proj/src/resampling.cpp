#include "granq/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "granq/error.hpp"
#include "granq/metrics.hpp"
#include "granq/parallel.hpp"
#include "granq/queueing.hpp"
#include "granq/rng.hpp"

namespace granq {

bool BootstrapResult::brackets_point() const {
  if (!point_estimate || !ci_low || !ci_high) return false;
  return *ci_low <= *point_estimate && *point_estimate <= *ci_high;
}

real quantile_type7(std::span<const real> sorted, real prob) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const real h = static_cast<real>(sorted.size() - 1) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const real frac = h - static_cast<real>(lo);
  if (frac == 0 || sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::pair<real, real> percentile_ci(std::span<const real> samples, real level) {
  if (!(level > 0 && level < 100)) throw ValidationError("confidence level must lie in (0,100)");
  std::vector<real> defined;
  defined.reserve(samples.size());
  for (real s : samples) {
    if (!std::isnan(s)) defined.push_back(s);
  }
  if (defined.size() < 2) throw ValidationError("percentile interval needs at least two defined samples");
  std::ranges::sort(defined);
  const real tail = (1 - level / 100) / 2;
  return {quantile_type7(defined, tail), quantile_type7(defined, 1 - tail)};
}

PairedUniverse PairedUniverse::take(std::span<const std::size_t> rows) const {
  PairedUniverse out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.tx.resize(n);
  out.actor.resize(n);
  out.labels.resize(rows.size());
  out.keys.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    out.tx[static_cast<Eigen::Index>(i)] = tx[static_cast<Eigen::Index>(r)];
    out.actor[static_cast<Eigen::Index>(i)] = actor[static_cast<Eigen::Index>(r)];
    out.labels[i] = labels[r];
    out.keys[i] = keys.empty() ? static_cast<std::uint32_t>(r) : keys[r];
  }
  return out;
}

std::size_t PairedUniverse::illicit_count() const {
  return static_cast<std::size_t>(std::ranges::count(labels, Label::illicit));
}

PairedUniverse make_paired(const LedgerGraph& graph, std::span<const AddrHandle> universe,
                           const ScoreTable& tx_projected, const ScoreTable& actor, const LabelTable& labels) {
  PairedUniverse p;
  const auto n = static_cast<Eigen::Index>(universe.size());
  p.tx.resize(n);
  p.actor.resize(n);
  p.labels.reserve(universe.size());
  p.keys.reserve(universe.size());
  auto rank = graph.addr_id_rank();
  for (std::size_t i = 0; i < universe.size(); ++i) {
    const auto a = universe[i].index();
    if (!tx_projected.has(a) || !actor.has(a)) {
      throw ValidationError("paired universe member '" + graph.addr_id(universe[i]) + "' lacks a score");
    }
    p.tx[static_cast<Eigen::Index>(i)] = tx_projected[a];
    p.actor[static_cast<Eigen::Index>(i)] = actor[a];
    p.labels.push_back(labels.at(universe[i]));
    p.keys.push_back(rank[a]);
  }
  return p;
}

std::vector<std::size_t> resample_rows(std::size_t n, std::uint64_t seed_base, std::size_t i) {
  SplitMix64 rng(seed_base + i);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = static_cast<std::size_t>(rng.index(n));
  return rows;
}

namespace {

void finish(BootstrapResult& r) {
  r.defined_samples = static_cast<std::size_t>(std::ranges::count_if(r.samples, [](real s) { return !std::isnan(s); }));
  if (r.defined_samples >= 2) {
    auto [lo, hi] = percentile_ci(r.samples, r.level);
    r.ci_low = lo;
    r.ci_high = hi;
  }
}

}  // namespace

std::vector<BootstrapResult> bootstrap_universe(const PairedUniverse& universe, const MultiStatistic& statistic,
                                                std::size_t n_statistics, const BootstrapOptions& options) {
  if (options.resamples < 2) throw ValidationError("bootstrap needs at least 2 resamples");
  if (universe.size() == 0) throw ValidationError("bootstrap universe is empty");

  std::vector<BootstrapResult> out(n_statistics);
  auto point = statistic(universe);
  if (point.size() != n_statistics) throw Error("statistic returned the wrong number of values");
  for (std::size_t s = 0; s < n_statistics; ++s) {
    out[s].point_estimate = point[s];
    out[s].samples.assign(options.resamples, std::numeric_limits<real>::quiet_NaN());
    out[s].resamples = options.resamples;
    out[s].seed_base = options.seed_base;
    out[s].level = options.level;
  }
  parallel_for(options.resamples, options.threads, [&](std::size_t i) {
    auto rows = resample_rows(universe.size(), options.seed_base, i);
    auto values = statistic(universe.take(rows));
    for (std::size_t s = 0; s < n_statistics; ++s) {
      if (values[s]) out[s].samples[i] = *values[s];
    }
  });
  for (auto& r : out) finish(r);
  return out;
}

BootstrapResult bootstrap_universe(const PairedUniverse& universe, const Statistic& statistic,
                                   const BootstrapOptions& options) {
  MultiStatistic wrapped = [&](const PairedUniverse& u) { return std::vector<std::optional<real>>{statistic(u)}; };
  return bootstrap_universe(universe, wrapped, 1, options).front();
}

BootstrapResult bootstrap_timesteps(std::span<const real> values, const BootstrapOptions& options) {
  if (options.resamples < 2) throw ValidationError("bootstrap needs at least 2 resamples");
  if (values.empty()) throw ValidationError("timestep bootstrap needs at least one value");
  BootstrapResult r;
  r.resamples = options.resamples;
  r.seed_base = options.seed_base;
  r.level = options.level;
  r.point_estimate = arithmetic_mean(values);
  r.samples.resize(options.resamples);
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < options.resamples; ++i) {
    SplitMix64 rng(options.seed_base + i);
    real x0 = 0, d = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const real x = values[static_cast<std::size_t>(rng.index(n))];
      if (j == 0) x0 = x;
      d += x - x0;
    }
    r.samples[i] = x0 + d / static_cast<real>(n);
  }
  finish(r);
  return r;
}

std::vector<std::string> paired_statistic_names() {
  return {"jaccard",          "rbo",      "tx_illicit_per_100", "actor_illicit_per_100", "burden_difference",
          "tx_yield",         "actor_yield", "actor_only_illicit_rate"};
}

MultiStatistic paired_statistics(real budget_fraction, real rbo_persistence) {
  return [=](const PairedUniverse& u) {
    using Names = PairedStatisticNames;
    std::vector<std::optional<real>> out(Names::count);
    const std::size_t k = budget_k(budget_fraction, u.size());
    if (k == 0) return out;
    auto tx_rank = select_top_k(u.tx, u.keys, k);
    auto actor_rank = select_top_k(u.actor, u.keys, k);
    std::vector<Eigen::Index> tx_set = tx_rank, actor_set = actor_rank;
    std::ranges::sort(tx_set);
    std::ranges::sort(actor_set);

    out[Names::jaccard] = jaccard_sorted<Eigen::Index>(tx_set, actor_set);
    out[Names::rbo] = rbo<Eigen::Index>(tx_rank, actor_rank, rbo_persistence);

    auto labels_of = [&](const std::vector<Eigen::Index>& rows) {
      std::vector<Label> ls;
      ls.reserve(rows.size());
      for (auto r : rows) ls.push_back(u.labels[static_cast<std::size_t>(r)]);
      return ls;
    };
    const std::size_t total = u.illicit_count();
    auto bt = burden_from_labels(labels_of(tx_rank), total);
    auto ba = burden_from_labels(labels_of(actor_rank), total);
    out[Names::tx_illicit_per_100] = bt.illicit_per_100;
    out[Names::actor_illicit_per_100] = ba.illicit_per_100;
    out[Names::burden_difference] = bt.illicit_per_100 - ba.illicit_per_100;
    out[Names::tx_yield] = bt.yield;
    out[Names::actor_yield] = ba.yield;

    std::vector<Eigen::Index> only;
    std::ranges::set_difference(actor_set, tx_set, std::back_inserter(only));
    if (!only.empty()) {
      auto ill = std::ranges::count_if(only, [&](Eigen::Index r) {
        return u.labels[static_cast<std::size_t>(r)] == Label::illicit;
      });
      out[Names::actor_only_rate] = static_cast<real>(ill) / static_cast<real>(only.size());
    }
    return out;
  };
}

}  // namespace granq
