#include "granq/hybrid.hpp"

#include <algorithm>
#include <string>

#include "granq/error.hpp"
#include "granq/metrics.hpp"

namespace granq {

void HybridParams::validate() const {
  if (!(alpha > 0 && alpha <= 1)) throw ValidationError("hybrid alpha must lie in (0,1]");
  if (!(delta >= 0 && delta <= 1)) throw ValidationError("hybrid delta must lie in [0,1]");
}

std::vector<Eigen::Index> HybridSelection::rows() const {
  std::vector<Eigen::Index> out = consensus;
  out.insert(out.end(), escalation.begin(), escalation.end());
  return out;
}

namespace {

// Top-k among a subset of rows, ordered by `score` with the usual tie rules.
std::vector<Eigen::Index> top_among(const std::vector<Eigen::Index>& rows, const VectorXr& score,
                                    std::span<const std::uint32_t> keys, std::size_t k) {
  VectorXr sub(static_cast<Eigen::Index>(rows.size()));
  std::vector<std::uint32_t> sub_keys(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sub[static_cast<Eigen::Index>(i)] = score[rows[i]];
    sub_keys[i] = keys.empty() ? static_cast<std::uint32_t>(rows[i]) : keys[static_cast<std::size_t>(rows[i])];
  }
  std::vector<Eigen::Index> out;
  for (Eigen::Index j : select_top_k(sub, sub_keys, k)) out.push_back(rows[static_cast<std::size_t>(j)]);
  return out;
}

}  // namespace

HybridSelection select_hybrid(const VectorXr& tx, const VectorXr& actor, std::span<const std::uint32_t> keys,
                              std::size_t k, const HybridParams& params) {
  params.validate();
  if (tx.size() != actor.size()) throw Error("hybrid score vectors differ in length");
  HybridSelection sel;
  sel.nominal_k = k;
  sel.consensus_slots = static_cast<std::size_t>(std::floor(params.alpha * static_cast<real>(k) + 1e-9));
  sel.consensus_slots = std::min(sel.consensus_slots, k);
  sel.escalation_slots = k - sel.consensus_slots;

  const VectorXr consensus = (tx.array() * actor.array()).sqrt().matrix();
  sel.consensus = select_top_k(consensus, keys, sel.consensus_slots);
  if (sel.escalation_slots == 0) return sel;

  std::vector<bool> taken(static_cast<std::size_t>(tx.size()), false);
  for (auto r : sel.consensus) taken[static_cast<std::size_t>(r)] = true;

  const VectorXr top = tx.cwiseMax(actor);
  std::vector<Eigen::Index> qualified, others;
  for (Eigen::Index r = 0; r < tx.size(); ++r) {
    if (taken[static_cast<std::size_t>(r)]) continue;
    (std::abs(tx[r] - actor[r]) > params.delta ? qualified : others).push_back(r);
  }
  sel.qualified = qualified.size();
  sel.escalation = top_among(qualified, top, keys, sel.escalation_slots);
  if (qualified.size() < sel.escalation_slots) {
    sel.escalation_fallback = true;
    auto fill = top_among(others, top, keys, sel.escalation_slots - qualified.size());
    sel.escalation.insert(sel.escalation.end(), fill.begin(), fill.end());
  }
  return sel;
}

HybridQueue hybrid_queue(const LedgerGraph& graph, const ScoreTable& tx_projected, const ScoreTable& actor,
                         std::span<const AddrHandle> universe, real budget_fraction, const HybridParams& params) {
  if (!(budget_fraction > 0 && budget_fraction < 1)) throw ValidationError("budget fraction must lie in (0,1)");
  const auto n = static_cast<Eigen::Index>(universe.size());
  VectorXr tx(n), ac(n);
  std::vector<std::uint32_t> keys(universe.size());
  auto rank = graph.addr_id_rank();
  for (std::size_t i = 0; i < universe.size(); ++i) {
    const auto a = universe[i].index();
    if (!tx_projected.has(a) || !actor.has(a)) {
      throw ValidationError("hybrid universe member '" + graph.addr_id(universe[i]) + "' is not scored at both levels");
    }
    tx[static_cast<Eigen::Index>(i)] = tx_projected[a];
    ac[static_cast<Eigen::Index>(i)] = actor[a];
    keys[i] = rank[a];
  }
  HybridQueue out;
  Queue& q = out.queue;
  q.universe_size = universe.size();
  q.universe_digest = universe_fingerprint(universe);
  q.budget_fraction = budget_fraction;
  q.nominal_k = budget_k(budget_fraction, universe.size());
  if (q.nominal_k == 0) throw ValidationError("hybrid budget gives K = 0");
  out.selection = select_hybrid(tx, ac, keys, q.nominal_k, params);
  for (auto r : out.selection.consensus) {
    q.members.emplace_back(universe[static_cast<std::size_t>(r)], consensus_score(tx[r], ac[r]));
  }
  for (auto r : out.selection.escalation) {
    q.members.emplace_back(universe[static_cast<std::size_t>(r)], std::max(tx[r], ac[r]));
  }
  q.tie_expansion = q.members.size() - q.nominal_k;
  q.tie_warning = static_cast<real>(q.tie_expansion) > 0.01 * static_cast<real>(q.nominal_k);
  return out;
}

namespace {

struct QueueOutcome {
  std::size_t size = 0;
  std::size_t illicit = 0;
  bool fallback = false;
};

QueueOutcome outcome(const PairedUniverse& u, const std::vector<Eigen::Index>& rows) {
  QueueOutcome o;
  o.size = rows.size();
  for (auto r : rows) o.illicit += u.labels[static_cast<std::size_t>(r)] == Label::illicit;
  return o;
}

}  // namespace

GridSearchResult grid_search(const PairedUniverse& validation, real budget_fraction, std::span<const real> alpha_grid,
                             std::span<const real> delta_grid) {
  if (alpha_grid.empty() || delta_grid.empty()) throw ValidationError("hybrid grid is empty");
  const std::size_t k = budget_k(budget_fraction, validation.size());
  if (k == 0) throw ValidationError("validation budget gives K = 0");
  const std::size_t total = validation.illicit_count();

  std::vector<real> alphas(alpha_grid.begin(), alpha_grid.end());
  std::vector<real> deltas(delta_grid.begin(), delta_grid.end());
  std::ranges::sort(alphas);
  std::ranges::sort(deltas);

  GridSearchResult result;
  for (real a : alphas) {
    for (real d : deltas) {
      HybridParams p{a, d};
      auto sel = select_hybrid(validation.tx, validation.actor, validation.keys, k, p);
      auto o = outcome(validation, sel.rows());
      GridCell cell;
      cell.params = p;
      cell.queue_size = o.size;
      cell.top_k_illicit_fraction = o.size ? static_cast<real>(o.illicit) / static_cast<real>(o.size) : 0;
      if (total > 0) cell.yield = static_cast<real>(o.illicit) / static_cast<real>(total);
      cell.escalation_fallback = sel.escalation_fallback;
      result.surface.push_back(cell);
    }
  }
  // Surface is sorted by (alpha, delta); the first strict maximum wins ties.
  result.best = result.surface.front();
  for (const auto& c : result.surface) {
    if (c.top_k_illicit_fraction > result.best.top_k_illicit_fraction) result.best = c;
  }
  return result;
}

HybridEvaluation evaluate_hybrid(std::span<const TimestepUniverse> steps, real budget_fraction,
                                 const HybridParams& params, const BootstrapOptions& options) {
  if (steps.empty()) throw ValidationError("hybrid evaluation needs at least one timestep");
  HybridEvaluation ev;
  ev.params = params;
  std::vector<real> improvements, hybrid_yields, best_singles;
  for (const auto& step : steps) {
    const PairedUniverse& u = step.paired;
    HybridTimestepRow row;
    row.t = step.t;
    row.universe_size = u.size();
    row.illicit = u.illicit_count();
    row.nominal_k = budget_k(budget_fraction, u.size());
    if (row.nominal_k == 0) {
      throw ValidationError("hybrid evaluation budget gives K = 0 at t=" + std::to_string(step.t));
    }
    auto sel = select_hybrid(u.tx, u.actor, u.keys, row.nominal_k, params);
    auto h = outcome(u, sel.rows());
    auto t = outcome(u, select_top_k(u.tx, u.keys, row.nominal_k));
    auto a = outcome(u, select_top_k(u.actor, u.keys, row.nominal_k));
    row.hybrid_k = h.size;
    row.escalation_fallback = sel.escalation_fallback;
    row.hybrid_illicit_per_100 = h.size ? 100.0 * static_cast<real>(h.illicit) / static_cast<real>(h.size) : 0;
    if (row.illicit > 0) {
      const real total = static_cast<real>(row.illicit);
      row.hybrid_yield = static_cast<real>(h.illicit) / total;
      row.tx_yield = static_cast<real>(t.illicit) / total;
      row.actor_yield = static_cast<real>(a.illicit) / total;
    }
    row.best_single = std::max(row.tx_yield, row.actor_yield);
    row.improvement = row.hybrid_yield - row.best_single;
    improvements.push_back(row.improvement);
    hybrid_yields.push_back(row.hybrid_yield);
    best_singles.push_back(row.best_single);
    ev.rows.push_back(row);
  }
  ev.mean_hybrid_yield = arithmetic_mean(hybrid_yields);
  ev.mean_best_single = arithmetic_mean(best_singles);
  ev.mean_improvement = arithmetic_mean(improvements);
  ev.improvement_ci = bootstrap_timesteps(improvements, options);
  return ev;
}

}  // namespace granq
