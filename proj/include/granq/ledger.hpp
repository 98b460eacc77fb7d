#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "granq/error.hpp"
#include "granq/types.hpp"

namespace granq {

// Inclusive timestep interval.
struct TimeRange {
  Timestep lo = 1;
  Timestep hi = 1;

  constexpr bool contains(Timestep t) const { return lo <= t && t <= hi; }
  friend constexpr bool operator==(TimeRange, TimeRange) = default;
};

// Which incident transactions count for an address:
//   cumulative(t)  timestamp <= t   (causal feature construction)
//   exact(t)       timestamp == t   (temporal projection)
//   window(lo, hi) lo <= timestamp <= hi (static projection over a split)
struct Horizon {
  enum class Mode { cumulative, exact, window };

  Mode mode = Mode::exact;
  TimeRange range{};

  static constexpr Horizon cumulative(Timestep t) {
    return {Mode::cumulative, {std::numeric_limits<Timestep>::min(), t}};
  }
  static constexpr Horizon exact(Timestep t) { return {Mode::exact, {t, t}}; }
  static constexpr Horizon window(Timestep lo, Timestep hi) { return {Mode::window, {lo, hi}}; }
  static constexpr Horizon window(TimeRange r) { return {Mode::window, r}; }

  constexpr bool contains(Timestep t) const { return range.contains(t); }
  // Timestep used as "now" for recency: the upper end of the range.
  constexpr Timestep upper() const { return range.hi; }
};

struct SplitSpec {
  TimeRange train{1, 34};
  TimeRange validation{35, 39};
  TimeRange test{40, 49};

  // Throws ValidationError unless train < validation < test and each is non-empty.
  void validate() const;
};

// One address-transaction incidence; a transaction on both sides of the same
// address appears once with both flags set.
struct Incidence {
  TxHandle tx;
  Timestep timestep = 0;
  bool input = false;
  bool output = false;

  bool matches(Direction d) const {
    switch (d) {
      case Direction::input: return input;
      case Direction::output: return output;
      case Direction::both: return input || output;
    }
    return false;
  }
};

class LabelTable {
 public:
  LabelTable() = default;
  explicit LabelTable(std::size_t n) : labels_(n, Label::unknown) {}

  std::size_t size() const { return labels_.size(); }
  Label operator[](std::size_t i) const { return i < labels_.size() ? labels_[i] : Label::unknown; }
  Label at(AddrHandle h) const { return (*this)[h.index()]; }
  Label at(TxHandle h) const { return (*this)[h.index()]; }
  void set(std::size_t i, Label l) { labels_.at(i) = l; }
  bool is_illicit(std::size_t i) const { return (*this)[i] == Label::illicit; }

  std::size_t count(Label l) const;
  std::span<const Label> values() const { return labels_; }

 private:
  std::vector<Label> labels_;
};

// Bipartite address/transaction ledger. Immutable once built; every read
// accessor is safe to call concurrently.
class LedgerGraph {
 public:
  class Builder;

  std::size_t tx_count() const { return tx_ids_.size(); }
  std::size_t addr_count() const { return addr_ids_.size(); }

  const std::string& tx_id(TxHandle h) const { return tx_ids_.at(h.index()); }
  const std::string& addr_id(AddrHandle h) const { return addr_ids_.at(h.index()); }
  std::optional<TxHandle> find_tx(std::string_view id) const;
  std::optional<AddrHandle> find_addr(std::string_view id) const;
  // Throws ValidationError for ids never seen at load time.
  AddrHandle addr(std::string_view id) const;
  TxHandle tx(std::string_view id) const;

  // Position of each address id in ascending string order; canonical
  // tie-break key for ranked output.
  std::span<const std::uint32_t> addr_id_rank() const { return addr_id_rank_; }

  Timestep timestep(TxHandle h) const { return tx_timestep_[h.index()]; }
  std::span<const Timestep> timesteps() const { return tx_timestep_; }
  Timestep min_timestep() const { return min_t_; }
  Timestep max_timestep() const { return max_t_; }
  // Transactions stamped exactly t (empty for dead or unknown timesteps).
  std::span<const TxHandle> txs_at(Timestep t) const;

  // Incidences of an address sorted by (timestep, tx).
  std::span<const Incidence> incidences(AddrHandle a) const;
  // Addresses incident to a transaction (either side), sorted, unique.
  std::span<const AddrHandle> tx_addresses(TxHandle t) const;
  // Unique 1-hop transaction neighbours ignoring edge direction, sorted.
  std::span<const TxHandle> tx_neighbors(TxHandle t) const;

  const std::vector<std::pair<AddrHandle, TxHandle>>& input_edges() const { return input_edges_; }
  const std::vector<std::pair<TxHandle, AddrHandle>>& output_edges() const { return output_edges_; }
  const std::vector<std::pair<TxHandle, TxHandle>>& txtx_edges() const { return txtx_edges_; }

  bool has_tx_features() const { return tx_features_.has_value(); }
  bool has_addr_features() const { return addr_features_.has_value(); }
  // Row i is the feature vector of handle i.
  const MatrixXr& tx_features() const;
  const MatrixXr& addr_features() const;
  const std::vector<std::string>& tx_feature_names() const { return tx_feature_names_; }
  const std::vector<std::string>& addr_feature_names() const { return addr_feature_names_; }

 private:
  std::vector<std::string> tx_ids_;
  std::vector<std::string> addr_ids_;
  std::unordered_map<std::string, TxHandle> tx_index_;
  std::unordered_map<std::string, AddrHandle> addr_index_;
  std::vector<Timestep> tx_timestep_;
  std::vector<std::uint32_t> addr_id_rank_;
  Timestep min_t_ = 0;
  Timestep max_t_ = -1;

  std::vector<std::pair<AddrHandle, TxHandle>> input_edges_;
  std::vector<std::pair<TxHandle, AddrHandle>> output_edges_;
  std::vector<std::pair<TxHandle, TxHandle>> txtx_edges_;

  // CSR adjacency.
  std::vector<std::size_t> addr_offsets_;
  std::vector<Incidence> addr_incidences_;
  std::vector<std::size_t> tx_addr_offsets_;
  std::vector<AddrHandle> tx_addrs_;
  std::vector<std::size_t> tx_nb_offsets_;
  std::vector<TxHandle> tx_nbs_;
  std::vector<std::size_t> step_offsets_;
  std::vector<TxHandle> step_txs_;

  std::optional<MatrixXr> tx_features_;
  std::optional<MatrixXr> addr_features_;
  std::vector<std::string> tx_feature_names_;
  std::vector<std::string> addr_feature_names_;
};

// Assembles a LedgerGraph. Handles are assigned in order of first insertion,
// so identical insertion sequences give identical graphs.
class LedgerGraph::Builder {
 public:
  TxHandle add_tx(std::string id, Timestep t);
  AddrHandle add_addr(std::string id);
  // Returns the existing handle or inserts.
  AddrHandle intern_addr(std::string_view id);

  std::optional<TxHandle> find_tx(std::string_view id) const;
  std::optional<AddrHandle> find_addr(std::string_view id) const;
  std::size_t tx_count() const { return g_.tx_ids_.size(); }
  std::size_t addr_count() const { return g_.addr_ids_.size(); }

  void add_input_edge(AddrHandle a, TxHandle t);
  void add_output_edge(TxHandle t, AddrHandle a);
  void add_txtx_edge(TxHandle from, TxHandle to);

  void set_tx_features(MatrixXr features, std::vector<std::string> names);
  void set_addr_features(MatrixXr features, std::vector<std::string> names);

  // Validates invariants and builds the adjacency indexes.
  LedgerGraph build() &&;

 private:
  LedgerGraph g_;
};

struct ActiveSet {
  Timestep timestep = 0;
  std::vector<AddrHandle> members;  // sorted ascending
  bool unknown_timestep = false;    // no transaction carries this timestep
};

// Addresses with at least one incident transaction (either side) at exactly t.
ActiveSet active_set(const LedgerGraph& graph, Timestep t);

// Incident transactions of `a` inside the horizon on the requested side(s),
// sorted by (timestep, handle). Empty for known addresses with no match.
std::vector<TxHandle> incident_transactions(const LedgerGraph& graph, AddrHandle a, Horizon horizon,
                                            Direction direction);
// String-keyed variant; unknown ids raise ValidationError.
std::vector<TxHandle> incident_transactions(const LedgerGraph& graph, std::string_view addr_id, Horizon horizon,
                                            Direction direction);

struct Occurrence {
  AddrHandle addr;
  Timestep timestep = 0;
  Label label = Label::unknown;
};

// Unique addresses of an occurrence list, ascending. Conflicting labels for
// one address raise ValidationError.
std::vector<AddrHandle> dedup_addresses(const LedgerGraph& graph, std::span<const Occurrence> occurrences);

// Occurrences (address, tx timestep) implied by the edge lists within a window.
std::vector<Occurrence> occurrences_in(const LedgerGraph& graph, TimeRange window, const LabelTable* labels = nullptr);

// Deduplicated addresses with an incident transaction in the window.
std::vector<AddrHandle> split_addresses(const LedgerGraph& graph, TimeRange window);

}  // namespace granq
