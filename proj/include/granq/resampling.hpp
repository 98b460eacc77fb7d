#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "granq/ledger.hpp"
#include "granq/scores.hpp"
#include "granq/types.hpp"

namespace granq {

struct BootstrapResult {
  std::optional<real> point_estimate;
  std::vector<real> samples;  // one per resample, ordered by resample index; NaN = undefined
  std::size_t defined_samples = 0;
  std::optional<real> ci_low;   // absent with fewer than two defined samples
  std::optional<real> ci_high;
  std::size_t resamples = 0;
  std::uint64_t seed_base = 0;
  real level = 95;

  // The interval contains the point estimate (false when either is absent).
  bool brackets_point() const;
};

// Empirical (1-level)/2 and 1-(1-level)/2 quantiles with linear interpolation
// between order statistics (type 7). NaN samples are ignored; fewer than two
// defined samples raise ValidationError.
std::pair<real, real> percentile_ci(std::span<const real> samples, real level = 95);
// Type-7 quantile of ascending `sorted` at prob in [0,1].
real quantile_type7(std::span<const real> sorted, real prob);

// Per-address paired record: both levels' scores and the label travel
// together through resampling.
struct PairedUniverse {
  VectorXr tx;
  VectorXr actor;
  std::vector<Label> labels;
  std::vector<std::uint32_t> keys;  // canonical tie-break key per entry

  std::size_t size() const { return labels.size(); }
  PairedUniverse take(std::span<const std::size_t> rows) const;
  std::size_t illicit_count() const;
};

PairedUniverse make_paired(const LedgerGraph& graph, std::span<const AddrHandle> universe,
                           const ScoreTable& tx_projected, const ScoreTable& actor, const LabelTable& labels);

// Row indices of resample `i`: |universe| draws with replacement from the
// generator seeded with seed_base + i.
std::vector<std::size_t> resample_rows(std::size_t n, std::uint64_t seed_base, std::size_t i);

using Statistic = std::function<std::optional<real>(const PairedUniverse&)>;
using MultiStatistic = std::function<std::vector<std::optional<real>>(const PairedUniverse&)>;

struct BootstrapOptions {
  std::size_t resamples = 1000;
  std::uint64_t seed_base = 0;
  unsigned threads = 1;
  real level = 95;
};

// Universe-level paired bootstrap. Every resample has |universe| entries
// drawn with replacement; statistics recompute their queues on it, so K is
// recalculated from the resample size. Undefined values are dropped from the
// interval and counted.
BootstrapResult bootstrap_universe(const PairedUniverse& universe, const Statistic& statistic,
                                   const BootstrapOptions& options);
std::vector<BootstrapResult> bootstrap_universe(const PairedUniverse& universe, const MultiStatistic& statistic,
                                                std::size_t n_statistics, const BootstrapOptions& options);

// Timestep-level bootstrap of the mean of `values`.
BootstrapResult bootstrap_timesteps(std::span<const real> values, const BootstrapOptions& options);

// Standard static comparison statistics over a paired universe at one budget.
struct PairedStatisticNames {
  static constexpr std::size_t jaccard = 0;
  static constexpr std::size_t rbo = 1;
  static constexpr std::size_t tx_illicit_per_100 = 2;
  static constexpr std::size_t actor_illicit_per_100 = 3;
  static constexpr std::size_t burden_difference = 4;  // tx - actor illicit per 100
  static constexpr std::size_t tx_yield = 5;
  static constexpr std::size_t actor_yield = 6;
  static constexpr std::size_t actor_only_rate = 7;
  static constexpr std::size_t count = 8;
};
std::vector<std::string> paired_statistic_names();
MultiStatistic paired_statistics(real budget_fraction, real rbo_persistence);

}  // namespace granq
