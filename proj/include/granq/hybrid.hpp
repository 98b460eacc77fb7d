#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "granq/queueing.hpp"
#include "granq/resampling.hpp"
#include "granq/types.hpp"

namespace granq {

// Geometric mean of the two calibrated scores. No smoothing: a zero on
// either side gives zero.
inline real consensus_score(real s_tx, real s_actor) { return std::sqrt(s_tx * s_actor); }

struct HybridParams {
  real alpha = 0.9;  // share of K filled by consensus rank
  real delta = 0.3;  // minimum |s_tx - s_actor| for escalation

  void validate() const;
};

// Row selection of the hybrid policy over a paired universe.
struct HybridSelection {
  std::size_t nominal_k = 0;
  std::size_t consensus_slots = 0;   // floor(alpha * K)
  std::size_t escalation_slots = 0;  // K - floor(alpha * K)
  std::vector<Eigen::Index> consensus;   // by consensus score, ties expanded
  std::vector<Eigen::Index> escalation;  // by max(s_tx, s_actor), ties expanded
  std::size_t qualified = 0;             // unselected rows with |diff| > delta
  bool escalation_fallback = false;      // some slots filled regardless of delta

  std::vector<Eigen::Index> rows() const;
};

// 1. consensus = sqrt(s_tx * s_actor); take the top floor(alpha K).
// 2. among the rest, rows with |s_tx - s_actor| > delta compete for the
//    remaining K - floor(alpha K) slots by max(s_tx, s_actor).
// 3. if too few qualify, the shortfall is filled by max score from the other
//    unselected rows and escalation_fallback is set.
HybridSelection select_hybrid(const VectorXr& tx, const VectorXr& actor, std::span<const std::uint32_t> keys,
                              std::size_t k, const HybridParams& params);

struct HybridQueue {
  Queue queue;
  HybridSelection selection;
};

// Hybrid queue over a universe; both tables must score every member.
HybridQueue hybrid_queue(const LedgerGraph& graph, const ScoreTable& tx_projected, const ScoreTable& actor,
                         std::span<const AddrHandle> universe, real budget_fraction, const HybridParams& params);

struct GridCell {
  HybridParams params;
  real top_k_illicit_fraction = 0;
  std::optional<real> yield;
  std::size_t queue_size = 0;
  bool escalation_fallback = false;
};

struct GridSearchResult {
  GridCell best;
  std::vector<GridCell> surface;  // alpha-major, ascending
};

// Exhaustive search maximising the top-K illicit fraction; ties go to the
// smaller alpha, then the smaller delta.
GridSearchResult grid_search(const PairedUniverse& validation, real budget_fraction, std::span<const real> alpha_grid,
                             std::span<const real> delta_grid);

struct HybridTimestepRow {
  Timestep t = 0;
  std::size_t universe_size = 0;
  std::size_t illicit = 0;
  std::size_t nominal_k = 0;
  std::size_t hybrid_k = 0;
  real hybrid_yield = 0;
  real tx_yield = 0;
  real actor_yield = 0;
  real best_single = 0;
  real improvement = 0;
  real hybrid_illicit_per_100 = 0;
  bool escalation_fallback = false;
};

struct HybridEvaluation {
  HybridParams params;
  std::vector<HybridTimestepRow> rows;
  real mean_hybrid_yield = 0;
  real mean_best_single = 0;
  real mean_improvement = 0;
  BootstrapResult improvement_ci;
};

struct TimestepUniverse {
  Timestep t = 0;
  PairedUniverse paired;
};

// Per timestep: improvement = hybrid yield - max(tx yield, actor yield).
// Timesteps without any illicit address score zero yield everywhere. The
// mean improvement carries a timestep-level bootstrap interval.
HybridEvaluation evaluate_hybrid(std::span<const TimestepUniverse> steps, real budget_fraction,
                                 const HybridParams& params, const BootstrapOptions& options);

}  // namespace granq
