#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "granq/ledger.hpp"
#include "granq/scores.hpp"
#include "granq/types.hpp"

namespace granq {

std::uint64_t universe_fingerprint(std::span<const AddrHandle> universe);

// floor(beta * n), robust to representation error in beta (0.29 * 100 -> 29).
std::size_t budget_k(real budget_fraction, std::size_t universe_size);

// Budgeted review queue. Members are ordered by score descending, then by
// canonical address-id order inside a tie group.
struct Queue {
  std::size_t universe_size = 0;
  // Order-independent fingerprint of the universe; queues compared by the
  // overlap metrics must agree on it.
  std::uint64_t universe_digest = 0;
  real budget_fraction = 0;
  std::size_t nominal_k = 0;
  std::vector<std::pair<AddrHandle, real>> members;
  std::size_t tie_expansion = 0;
  // Tie expansion exceeded 1% of nominal_k.
  bool tie_warning = false;

  std::size_t size() const { return members.size(); }
  std::vector<AddrHandle> ranked() const;
  // Members sorted by handle (set form for overlap metrics).
  std::vector<AddrHandle> member_set() const;
};

// Positions of the top-k entries of `scores` plus the whole tie group at the
// boundary score, ordered by (score desc, key asc, position asc). `keys` may
// be empty, in which case position alone breaks ties. k is clamped to size.
std::vector<Eigen::Index> select_top_k(const VectorXr& scores, std::span<const std::uint32_t> keys, std::size_t k);

// Top-K over `universe` using the scores in `table`. Universe members without
// a score raise ValidationError unless `zero_fill` is set. nominal_k == 0
// raises ValidationError.
Queue top_k(const LedgerGraph& graph, const ScoreTable& table, std::span<const AddrHandle> universe,
            real budget_fraction, bool zero_fill = false);

// Top-K over values parallel to `universe`.
Queue top_k(const LedgerGraph& graph, std::span<const AddrHandle> universe, const VectorXr& values,
            real budget_fraction);

// Activity baseline: exactly nominal_k members ordered by (count desc,
// address id asc); no tie expansion.
Queue activity_queue(const LedgerGraph& graph, std::span<const AddrHandle> universe, std::span<const int> counts,
                     real budget_fraction);

struct UniverseSpec {
  enum class Kind { temporal, static_split };
  Kind kind = Kind::temporal;
  Timestep timestep = 0;  // temporal
  TimeRange window{};     // static
  bool hybrid = false;    // also require scores at both levels

  static UniverseSpec temporal(Timestep t, bool hybrid = false) { return {Kind::temporal, t, {}, hybrid}; }
  static UniverseSpec static_split(TimeRange w, bool hybrid = false) { return {Kind::static_split, 0, w, hybrid}; }
};

// Shared evaluation universe for both queues: the active set at t, or the
// deduplicated addresses of the split window. Hybrid mode keeps only
// addresses scored in both tables. Empty results raise ValidationError.
std::vector<AddrHandle> common_universe(const LedgerGraph& graph, const UniverseSpec& spec,
                                        const ScoreTable* tx_projected = nullptr,
                                        const ScoreTable* actor = nullptr);

}  // namespace granq
