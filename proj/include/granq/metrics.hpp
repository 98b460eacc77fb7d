#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "granq/error.hpp"
#include "granq/ledger.hpp"
#include "granq/queueing.hpp"
#include "granq/scores.hpp"

namespace granq {

// |A ∩ B| / |A ∪ B| over two sorted unique ranges. Two empty sets give 1.
template <typename T>
real jaccard_sorted(std::span<const T> a, std::span<const T> b) {
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - common;
  return uni == 0 ? 1.0 : static_cast<real>(common) / static_cast<real>(uni);
}

// Jaccard of two queue member sets. Queues over different universes raise
// ValidationError.
real jaccard(const Queue& q1, const Queue& q2);

// Extrapolated rank-biased overlap evaluated to depth d = max(|l1|, |l2|):
//   (X_d / d) p^d + ((1 - p) / p) * sum_{i=1..d} (X_i / i) p^i
// where X_i is the overlap of the two depth-i prefixes (a shorter list
// contributes its whole length). Identical lists give exactly 1. Items must be
// unique within each list.
template <typename T, typename Hash = std::hash<T>>
real rbo(std::span<const T> l1, std::span<const T> l2, real p) {
  if (!(p > 0 && p < 1)) throw ValidationError("RBO persistence must lie in (0,1)");
  const std::size_t d = std::max(l1.size(), l2.size());
  if (d == 0) return 1.0;
  std::unordered_set<T, Hash> seen1, seen2;
  seen1.reserve(l1.size());
  seen2.reserve(l2.size());
  std::size_t overlap = 0;
  bool identical = l1.size() == l2.size();
  real weight = 1;
  real series = 0;
  for (std::size_t i = 0; i < d; ++i) {
    if (i < l1.size()) {
      overlap += seen2.contains(l1[i]);
      seen1.insert(l1[i]);
    }
    if (i < l2.size()) {
      overlap += seen1.contains(l2[i]);
      seen2.insert(l2[i]);
    }
    if (overlap != i + 1) identical = false;
    weight *= p;
    series += static_cast<real>(overlap) / static_cast<real>(i + 1) * weight;
  }
  if (identical) return 1.0;
  return static_cast<real>(overlap) / static_cast<real>(d) * weight + (1 - p) / p * series;
}

real rbo(const Queue& q1, const Queue& q2, real p);

struct BurdenReport {
  std::size_t k_actual = 0;
  std::size_t illicit = 0;
  std::size_t licit = 0;
  std::size_t unknown = 0;
  real illicit_per_100 = 0;
  real licit_per_100 = 0;
  real unknown_per_100 = 0;
  std::optional<real> reviews_per_tp;  // absent when no illicit member
  std::optional<real> yield;           // absent when the universe has no illicit
  bool labeled_only = false;
};

// Partition of the reviewed labels. With `labeled_only`, unknowns are dropped
// and K becomes the labeled member count.
BurdenReport burden_from_labels(std::span<const Label> member_labels, std::size_t total_illicit,
                                bool labeled_only = false);
BurdenReport burden(const Queue& q, const LabelTable& labels, std::size_t total_illicit, bool labeled_only = false);

// Illicit fraction of Q_actor \ Q_tx; absent when the difference is empty.
std::optional<real> actor_only_illicit_rate(const Queue& q_actor, const Queue& q_tx, const LabelTable& labels);

// Fraction of members whose projected score aggregates more than one
// incident transaction. `addrs`/`counts` are parallel; every member must be
// present.
real fragmentation(const Queue& q_tx, std::span<const AddrHandle> addrs, std::span<const int> counts);

struct NovelPositive {
  std::size_t novel = 0;
  std::size_t total = 0;
  std::optional<real> rate;  // absent when nothing is illicit at t
};

// Share of illicit addresses at t never illicit at an earlier timestep.
NovelPositive novel_positive_rate(Timestep t, const std::map<Timestep, std::vector<AddrHandle>>& illicit_history);

// Illicit members of each active set, keyed by timestep, for the novel-positive rate.
std::map<Timestep, std::vector<AddrHandle>> illicit_history(const LedgerGraph& graph, const LabelTable& addr_labels,
                                                            Timestep first, Timestep last);

struct StratumResult {
  std::string name;  // "decile_1".."decile_10" or "exact_degree_1"
  int index = 0;     // 1..10, 0 for the exact-degree-1 stratum
  std::size_t universe_size = 0;
  std::size_t k = 0;
  int min_count = 0;
  int max_count = 0;
  std::optional<real> jaccard;  // absent when the stratum budget gives K = 0
};

// Decile assignment by incident count: q = floor(n / 10); an address takes
// the decile of the first member of its tie group (position / q, capped at
// the last decile, which absorbs the residual). Returns 0-based deciles
// parallel to `counts`. Fewer than 10 addresses raise ValidationError.
std::vector<int> decile_assignment(std::span<const int> counts);

// Ten deciles plus the exact-degree-1 stratum, each with its own top-budget
// queues at both levels and their Jaccard.
std::vector<StratumResult> degree_strata(const LedgerGraph& graph, std::span<const AddrHandle> universe,
                                         std::span<const int> counts, const ScoreTable& tx_projected,
                                         const ScoreTable& actor, real budget_fraction);

enum class Verdict { granularity_driven, information_driven, mixed };
std::string_view to_string(Verdict v);

// All below threshold: granularity-driven; all at or above: information-driven.
Verdict ablation_verdict(std::span<const real> regime_jaccards, real threshold = 0.80);

real arithmetic_mean(std::span<const real> xs);
// sum(K_t x_t) / sum(K_t)
real k_weighted_mean(std::span<const real> xs, std::span<const real> ks);

}  // namespace granq
