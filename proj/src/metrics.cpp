#include "granq/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace granq {
namespace {

void require_same_universe(const Queue& a, const Queue& b) {
  if (a.universe_size != b.universe_size || a.universe_digest != b.universe_digest) {
    throw ValidationError("queues are defined over different universes");
  }
}

}  // namespace

real jaccard(const Queue& q1, const Queue& q2) {
  require_same_universe(q1, q2);
  auto a = q1.member_set();
  auto b = q2.member_set();
  return jaccard_sorted<AddrHandle>(a, b);
}

real rbo(const Queue& q1, const Queue& q2, real p) {
  require_same_universe(q1, q2);
  auto a = q1.ranked();
  auto b = q2.ranked();
  return rbo<AddrHandle>(a, b, p);
}

BurdenReport burden_from_labels(std::span<const Label> member_labels, std::size_t total_illicit, bool labeled_only) {
  BurdenReport r;
  r.labeled_only = labeled_only;
  for (Label l : member_labels) {
    switch (l) {
      case Label::illicit: ++r.illicit; break;
      case Label::licit: ++r.licit; break;
      case Label::unknown: ++r.unknown; break;
    }
  }
  if (labeled_only) r.unknown = 0;
  r.k_actual = r.illicit + r.licit + r.unknown;
  if (r.k_actual > 0) {
    const real k = static_cast<real>(r.k_actual);
    r.illicit_per_100 = 100.0 * static_cast<real>(r.illicit) / k;
    r.licit_per_100 = 100.0 * static_cast<real>(r.licit) / k;
    r.unknown_per_100 = 100.0 * static_cast<real>(r.unknown) / k;
  }
  if (r.illicit > 0) r.reviews_per_tp = static_cast<real>(r.k_actual) / static_cast<real>(r.illicit);
  if (total_illicit > 0) r.yield = static_cast<real>(r.illicit) / static_cast<real>(total_illicit);
  return r;
}

BurdenReport burden(const Queue& q, const LabelTable& labels, std::size_t total_illicit, bool labeled_only) {
  std::vector<Label> ls;
  ls.reserve(q.size());
  for (const auto& [a, s] : q.members) ls.push_back(labels.at(a));
  return burden_from_labels(ls, total_illicit, labeled_only);
}

std::optional<real> actor_only_illicit_rate(const Queue& q_actor, const Queue& q_tx, const LabelTable& labels) {
  require_same_universe(q_actor, q_tx);
  auto a = q_actor.member_set();
  auto t = q_tx.member_set();
  std::vector<AddrHandle> only;
  std::ranges::set_difference(a, t, std::back_inserter(only));
  if (only.empty()) return std::nullopt;
  auto ill = std::ranges::count_if(only, [&](AddrHandle h) { return labels.at(h) == Label::illicit; });
  return static_cast<real>(ill) / static_cast<real>(only.size());
}

real fragmentation(const Queue& q_tx, std::span<const AddrHandle> addrs, std::span<const int> counts) {
  if (addrs.size() != counts.size()) throw Error("fragmentation counts are not parallel to addresses");
  if (q_tx.members.empty()) return 0;
  std::unordered_map<AddrHandle, int> lookup;
  lookup.reserve(addrs.size());
  for (std::size_t i = 0; i < addrs.size(); ++i) lookup.emplace(addrs[i], counts[i]);
  std::size_t multi = 0;
  for (const auto& [a, s] : q_tx.members) {
    auto it = lookup.find(a);
    if (it == lookup.end()) throw ValidationError("fragmentation: no incident count for a queue member");
    multi += it->second > 1;
  }
  return static_cast<real>(multi) / static_cast<real>(q_tx.members.size());
}

NovelPositive novel_positive_rate(Timestep t, const std::map<Timestep, std::vector<AddrHandle>>& illicit_history) {
  NovelPositive out;
  auto now = illicit_history.find(t);
  if (now == illicit_history.end()) return out;
  std::unordered_set<AddrHandle> prior;
  for (auto it = illicit_history.begin(); it != now; ++it) prior.insert(it->second.begin(), it->second.end());
  std::unordered_set<AddrHandle> current(now->second.begin(), now->second.end());
  out.total = current.size();
  for (AddrHandle a : current) out.novel += !prior.contains(a);
  if (out.total > 0) out.rate = static_cast<real>(out.novel) / static_cast<real>(out.total);
  return out;
}

std::map<Timestep, std::vector<AddrHandle>> illicit_history(const LedgerGraph& graph, const LabelTable& addr_labels,
                                                            Timestep first, Timestep last) {
  std::map<Timestep, std::vector<AddrHandle>> out;
  for (Timestep t = first; t <= last; ++t) {
    auto& bucket = out[t];
    for (AddrHandle a : active_set(graph, t).members) {
      if (addr_labels.at(a) == Label::illicit) bucket.push_back(a);
    }
  }
  return out;
}

std::vector<int> decile_assignment(std::span<const int> counts) {
  const std::size_t n = counts.size();
  if (n < 10) throw ValidationError("degree strata need at least 10 addresses");
  const std::size_t q = n / 10;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return counts[a] < counts[b]; });
  std::vector<int> decile(n, 0);
  std::size_t group_start = 0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    if (pos > 0 && counts[order[pos]] != counts[order[pos - 1]]) group_start = pos;
    decile[order[pos]] = static_cast<int>(std::min<std::size_t>(9, group_start / q));
  }
  return decile;
}

std::vector<StratumResult> degree_strata(const LedgerGraph& graph, std::span<const AddrHandle> universe,
                                         std::span<const int> counts, const ScoreTable& tx_projected,
                                         const ScoreTable& actor, real budget_fraction) {
  if (counts.size() != universe.size()) throw Error("degree strata counts are not parallel to universe");
  auto decile = decile_assignment(counts);

  auto evaluate = [&](std::string name, int index, const std::vector<AddrHandle>& members,
                      const std::vector<int>& member_counts) {
    StratumResult r;
    r.name = std::move(name);
    r.index = index;
    r.universe_size = members.size();
    r.k = budget_k(budget_fraction, members.size());
    if (!member_counts.empty()) {
      auto [lo, hi] = std::ranges::minmax_element(member_counts);
      r.min_count = *lo;
      r.max_count = *hi;
    }
    if (r.k > 0) {
      Queue qt = top_k(graph, tx_projected, members, budget_fraction);
      Queue qa = top_k(graph, actor, members, budget_fraction);
      r.jaccard = jaccard(qt, qa);
    }
    return r;
  };

  std::vector<StratumResult> out;
  for (int d = 0; d < 10; ++d) {
    std::vector<AddrHandle> members;
    std::vector<int> mc;
    for (std::size_t i = 0; i < universe.size(); ++i) {
      if (decile[i] == d) {
        members.push_back(universe[i]);
        mc.push_back(counts[i]);
      }
    }
    out.push_back(evaluate("decile_" + std::to_string(d + 1), d + 1, members, mc));
  }
  std::vector<AddrHandle> ones;
  std::vector<int> oc;
  for (std::size_t i = 0; i < universe.size(); ++i) {
    if (counts[i] == 1) {
      ones.push_back(universe[i]);
      oc.push_back(1);
    }
  }
  out.push_back(evaluate("exact_degree_1", 0, ones, oc));
  return out;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::granularity_driven: return "granularity_driven";
    case Verdict::information_driven: return "information_driven";
    case Verdict::mixed: return "mixed";
  }
  return "mixed";
}

Verdict ablation_verdict(std::span<const real> regime_jaccards, real threshold) {
  if (regime_jaccards.empty()) throw ValidationError("ablation verdict needs at least one regime");
  const bool all_below = std::ranges::all_of(regime_jaccards, [&](real j) { return j < threshold; });
  const bool all_above = std::ranges::all_of(regime_jaccards, [&](real j) { return j >= threshold; });
  if (all_below) return Verdict::granularity_driven;
  if (all_above) return Verdict::information_driven;
  return Verdict::mixed;
}

real arithmetic_mean(std::span<const real> xs) {
  if (xs.empty()) return std::numeric_limits<real>::quiet_NaN();
  // Shifted by the first value so a constant input comes back exactly.
  const real x0 = xs.front();
  real d = 0;
  for (real x : xs) d += x - x0;
  return x0 + d / static_cast<real>(xs.size());
}

real k_weighted_mean(std::span<const real> xs, std::span<const real> ks) {
  if (xs.size() != ks.size()) throw Error("weights are not parallel to values");
  real num = 0, den = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += ks[i] * xs[i];
    den += ks[i];
  }
  return den > 0 ? num / den : std::numeric_limits<real>::quiet_NaN();
}

}  // namespace granq
