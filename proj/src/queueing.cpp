#include "granq/queueing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "granq/error.hpp"

namespace granq {

std::size_t budget_k(real budget_fraction, std::size_t universe_size) {
  const real x = budget_fraction * static_cast<real>(universe_size);
  const real nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max<real>(1, x)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::floor(x));
}

std::uint64_t universe_fingerprint(std::span<const AddrHandle> universe) {
  // Sum of mixed handles: order-independent, sensitive to membership.
  std::uint64_t acc = universe.size();
  for (AddrHandle a : universe) {
    std::uint64_t z = a.value + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    acc += z ^ (z >> 31);
  }
  return acc;
}

std::vector<AddrHandle> Queue::ranked() const {
  std::vector<AddrHandle> out;
  out.reserve(members.size());
  for (const auto& [a, s] : members) out.push_back(a);
  return out;
}

std::vector<AddrHandle> Queue::member_set() const {
  auto out = ranked();
  std::ranges::sort(out);
  return out;
}

std::vector<Eigen::Index> select_top_k(const VectorXr& scores, std::span<const std::uint32_t> keys, std::size_t k) {
  const Eigen::Index n = scores.size();
  if (!keys.empty() && static_cast<Eigen::Index>(keys.size()) != n) throw Error("tie-break keys do not match scores");
  std::vector<Eigen::Index> out;
  if (k == 0 || n == 0) return out;
  k = std::min<std::size_t>(k, static_cast<std::size_t>(n));

  std::vector<real> tmp(scores.data(), scores.data() + n);
  auto kth = tmp.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(tmp.begin(), kth, tmp.end(), std::greater<real>());
  const real boundary = *kth;

  for (Eigen::Index i = 0; i < n; ++i) {
    if (scores[i] >= boundary) out.push_back(i);
  }
  auto key = [&](Eigen::Index i) -> std::uint32_t { return keys.empty() ? 0u : keys[static_cast<std::size_t>(i)]; };
  std::ranges::sort(out, [&](Eigen::Index a, Eigen::Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (key(a) != key(b)) return key(a) < key(b);
    return a < b;
  });
  return out;
}

namespace {

Queue make_queue(const LedgerGraph& graph, std::span<const AddrHandle> universe, const VectorXr& values,
                 real budget_fraction) {
  if (!(budget_fraction > 0 && budget_fraction < 1)) {
    throw ValidationError("budget fraction must lie in (0,1)");
  }
  Queue q;
  q.universe_size = universe.size();
  q.universe_digest = universe_fingerprint(universe);
  q.budget_fraction = budget_fraction;
  q.nominal_k = budget_k(budget_fraction, universe.size());
  if (q.nominal_k == 0) {
    throw ValidationError("budget " + std::to_string(budget_fraction) + " on a universe of " +
                          std::to_string(universe.size()) + " gives K = 0");
  }
  std::vector<std::uint32_t> keys(universe.size());
  auto rank = graph.addr_id_rank();
  for (std::size_t i = 0; i < universe.size(); ++i) keys[i] = rank[universe[i].index()];
  for (Eigen::Index i : select_top_k(values, keys, q.nominal_k)) {
    q.members.emplace_back(universe[static_cast<std::size_t>(i)], values[i]);
  }
  q.tie_expansion = q.members.size() - q.nominal_k;
  q.tie_warning = static_cast<real>(q.tie_expansion) > 0.01 * static_cast<real>(q.nominal_k);
  return q;
}

}  // namespace

Queue top_k(const LedgerGraph& graph, const ScoreTable& table, std::span<const AddrHandle> universe,
            real budget_fraction, bool zero_fill) {
  VectorXr values(static_cast<Eigen::Index>(universe.size()));
  std::vector<std::string> missing;
  for (std::size_t i = 0; i < universe.size(); ++i) {
    const std::size_t a = universe[i].index();
    if (table.has(a)) {
      values[static_cast<Eigen::Index>(i)] = table[a];
    } else if (zero_fill) {
      values[static_cast<Eigen::Index>(i)] = 0;
    } else if (missing.size() < 10) {
      missing.push_back(a < graph.addr_count() ? graph.addr_id(universe[i]) : std::to_string(a));
    } else {
      missing.emplace_back("...");
      break;
    }
  }
  if (!missing.empty()) {
    std::string msg = "universe addresses without a score:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }
  return make_queue(graph, universe, values, budget_fraction);
}

Queue top_k(const LedgerGraph& graph, std::span<const AddrHandle> universe, const VectorXr& values,
            real budget_fraction) {
  if (static_cast<std::size_t>(values.size()) != universe.size()) throw Error("values do not match universe");
  return make_queue(graph, universe, values, budget_fraction);
}

Queue activity_queue(const LedgerGraph& graph, std::span<const AddrHandle> universe, std::span<const int> counts,
                     real budget_fraction) {
  if (counts.size() != universe.size()) throw Error("activity counts do not match universe");
  Queue q;
  q.universe_size = universe.size();
  q.universe_digest = universe_fingerprint(universe);
  q.budget_fraction = budget_fraction;
  q.nominal_k = budget_k(budget_fraction, universe.size());
  if (q.nominal_k == 0) throw ValidationError("activity baseline budget gives K = 0");
  std::vector<std::size_t> order(universe.size());
  std::iota(order.begin(), order.end(), 0);
  auto rank = graph.addr_id_rank();
  auto before = [&](std::size_t a, std::size_t b) {
    if (counts[a] != counts[b]) return counts[a] > counts[b];
    return rank[universe[a].index()] < rank[universe[b].index()];
  };
  auto mid = order.begin() + static_cast<std::ptrdiff_t>(q.nominal_k);
  std::partial_sort(order.begin(), mid, order.end(), before);
  for (auto it = order.begin(); it != mid; ++it) q.members.emplace_back(universe[*it], counts[*it]);
  return q;
}

std::vector<AddrHandle> common_universe(const LedgerGraph& graph, const UniverseSpec& spec,
                                        const ScoreTable* tx_projected, const ScoreTable* actor) {
  std::vector<AddrHandle> u;
  if (spec.kind == UniverseSpec::Kind::temporal) {
    u = active_set(graph, spec.timestep).members;
    if (u.empty()) throw ValidationError("active set at t=" + std::to_string(spec.timestep) + " is empty");
  } else {
    u = split_addresses(graph, spec.window);
  }
  if (spec.hybrid) {
    if (!tx_projected || !actor) throw ValidationError("hybrid universe needs both score tables");
    std::erase_if(u, [&](AddrHandle a) { return !tx_projected->has(a.index()) || !actor->has(a.index()); });
  }
  if (u.empty()) throw ValidationError("common universe is empty");
  return u;
}

}  // namespace granq
