#include "granq/ledger.hpp"

#include <algorithm>
#include <string>

namespace granq {

void SplitSpec::validate() const {
  for (auto [name, r] : {std::pair{"train", train}, {"validation", validation}, {"test", test}}) {
    if (r.lo > r.hi) throw ValidationError(std::string("split ") + name + " range is empty");
  }
  if (!(train.hi < validation.lo && validation.hi < test.lo)) {
    throw ValidationError("split ranges must be disjoint and ordered train < validation < test");
  }
}

std::size_t LabelTable::count(Label l) const { return static_cast<std::size_t>(std::ranges::count(labels_, l)); }

// ---------------------------------------------------------------------------
// LedgerGraph

std::optional<TxHandle> LedgerGraph::find_tx(std::string_view id) const {
  auto it = tx_index_.find(std::string(id));
  if (it == tx_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<AddrHandle> LedgerGraph::find_addr(std::string_view id) const {
  auto it = addr_index_.find(std::string(id));
  if (it == addr_index_.end()) return std::nullopt;
  return it->second;
}

AddrHandle LedgerGraph::addr(std::string_view id) const {
  if (auto h = find_addr(id)) return *h;
  throw ValidationError("unknown address '" + std::string(id) + "'");
}

TxHandle LedgerGraph::tx(std::string_view id) const {
  if (auto h = find_tx(id)) return *h;
  throw ValidationError("unknown transaction '" + std::string(id) + "'");
}

std::span<const TxHandle> LedgerGraph::txs_at(Timestep t) const {
  if (tx_ids_.empty() || t < min_t_ || t > max_t_) return {};
  auto i = static_cast<std::size_t>(t - min_t_);
  return std::span(step_txs_).subspan(step_offsets_[i], step_offsets_[i + 1] - step_offsets_[i]);
}

std::span<const Incidence> LedgerGraph::incidences(AddrHandle a) const {
  auto i = a.index();
  return std::span(addr_incidences_).subspan(addr_offsets_.at(i), addr_offsets_[i + 1] - addr_offsets_[i]);
}

std::span<const AddrHandle> LedgerGraph::tx_addresses(TxHandle t) const {
  auto i = t.index();
  return std::span(tx_addrs_).subspan(tx_addr_offsets_.at(i), tx_addr_offsets_[i + 1] - tx_addr_offsets_[i]);
}

std::span<const TxHandle> LedgerGraph::tx_neighbors(TxHandle t) const {
  auto i = t.index();
  return std::span(tx_nbs_).subspan(tx_nb_offsets_.at(i), tx_nb_offsets_[i + 1] - tx_nb_offsets_[i]);
}

const MatrixXr& LedgerGraph::tx_features() const {
  if (!tx_features_) throw ValidationError("graph has no transaction features");
  return *tx_features_;
}

const MatrixXr& LedgerGraph::addr_features() const {
  if (!addr_features_) throw ValidationError("graph has no address features");
  return *addr_features_;
}

// ---------------------------------------------------------------------------
// Builder

TxHandle LedgerGraph::Builder::add_tx(std::string id, Timestep t) {
  if (t < 1) throw ValidationError("transaction '" + id + "' has timestep " + std::to_string(t) + " (< 1)");
  TxHandle h{g_.tx_ids_.size()};
  auto [it, inserted] = g_.tx_index_.emplace(id, h);
  if (!inserted) throw ValidationError("duplicate transaction id '" + id + "'");
  g_.tx_ids_.push_back(std::move(id));
  g_.tx_timestep_.push_back(t);
  return h;
}

AddrHandle LedgerGraph::Builder::add_addr(std::string id) {
  AddrHandle h{g_.addr_ids_.size()};
  auto [it, inserted] = g_.addr_index_.emplace(id, h);
  if (!inserted) throw ValidationError("duplicate address id '" + id + "'");
  g_.addr_ids_.push_back(std::move(id));
  return h;
}

AddrHandle LedgerGraph::Builder::intern_addr(std::string_view id) {
  if (auto h = find_addr(id)) return *h;
  return add_addr(std::string(id));
}

std::optional<TxHandle> LedgerGraph::Builder::find_tx(std::string_view id) const { return g_.find_tx(id); }
std::optional<AddrHandle> LedgerGraph::Builder::find_addr(std::string_view id) const { return g_.find_addr(id); }

void LedgerGraph::Builder::add_input_edge(AddrHandle a, TxHandle t) {
  if (a.index() >= g_.addr_ids_.size() || t.index() >= g_.tx_ids_.size()) {
    throw ValidationError("input edge has dangling endpoint");
  }
  g_.input_edges_.emplace_back(a, t);
}

void LedgerGraph::Builder::add_output_edge(TxHandle t, AddrHandle a) {
  if (a.index() >= g_.addr_ids_.size() || t.index() >= g_.tx_ids_.size()) {
    throw ValidationError("output edge has dangling endpoint");
  }
  g_.output_edges_.emplace_back(t, a);
}

void LedgerGraph::Builder::add_txtx_edge(TxHandle from, TxHandle to) {
  if (from.index() >= g_.tx_ids_.size() || to.index() >= g_.tx_ids_.size()) {
    throw ValidationError("tx-tx edge has dangling endpoint");
  }
  g_.txtx_edges_.emplace_back(from, to);
}

void LedgerGraph::Builder::set_tx_features(MatrixXr features, std::vector<std::string> names) {
  if (static_cast<std::size_t>(features.cols()) != names.size()) {
    throw ValidationError("transaction feature names do not match feature width");
  }
  g_.tx_features_ = std::move(features);
  g_.tx_feature_names_ = std::move(names);
}

void LedgerGraph::Builder::set_addr_features(MatrixXr features, std::vector<std::string> names) {
  if (static_cast<std::size_t>(features.cols()) != names.size()) {
    throw ValidationError("address feature names do not match feature width");
  }
  g_.addr_features_ = std::move(features);
  g_.addr_feature_names_ = std::move(names);
}

namespace {

template <typename T>
void build_csr(std::size_t n, std::vector<std::pair<std::size_t, T>>& pairs, std::vector<std::size_t>& offsets,
               std::vector<T>& values) {
  offsets.assign(n + 1, 0);
  for (const auto& p : pairs) ++offsets[p.first + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  values.resize(pairs.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (const auto& p : pairs) values[cursor[p.first]++] = p.second;
}

}  // namespace

LedgerGraph LedgerGraph::Builder::build() && {
  LedgerGraph& g = g_;
  const std::size_t n_tx = g.tx_ids_.size();
  const std::size_t n_addr = g.addr_ids_.size();

  if (g.tx_features_ && static_cast<std::size_t>(g.tx_features_->rows()) != n_tx) {
    throw ValidationError("transaction feature matrix does not cover every transaction");
  }
  if (g.addr_features_ && static_cast<std::size_t>(g.addr_features_->rows()) != n_addr) {
    throw ValidationError("address feature matrix does not cover every address");
  }

  if (n_tx > 0) {
    auto [lo, hi] = std::ranges::minmax_element(g.tx_timestep_);
    g.min_t_ = *lo;
    g.max_t_ = *hi;
  }

  {
    std::vector<std::uint32_t> order(n_addr);
    for (std::size_t i = 0; i < n_addr; ++i) order[i] = static_cast<std::uint32_t>(i);
    std::ranges::sort(order, [&](std::uint32_t x, std::uint32_t y) { return g.addr_ids_[x] < g.addr_ids_[y]; });
    g.addr_id_rank_.resize(n_addr);
    for (std::size_t r = 0; r < n_addr; ++r) g.addr_id_rank_[order[r]] = static_cast<std::uint32_t>(r);
  }

  // Timestep buckets.
  {
    std::size_t span = n_tx > 0 ? static_cast<std::size_t>(g.max_t_ - g.min_t_ + 1) : 0;
    std::vector<std::pair<std::size_t, TxHandle>> pairs;
    pairs.reserve(n_tx);
    for (std::size_t i = 0; i < n_tx; ++i) {
      pairs.emplace_back(static_cast<std::size_t>(g.tx_timestep_[i] - g.min_t_), TxHandle{i});
    }
    build_csr(span, pairs, g.step_offsets_, g.step_txs_);
  }

  // Address incidences: merge input/output sides per (addr, tx).
  {
    std::vector<std::pair<std::size_t, Incidence>> pairs;
    pairs.reserve(g.input_edges_.size() + g.output_edges_.size());
    for (auto [a, t] : g.input_edges_) pairs.push_back({a.index(), {t, g.tx_timestep_[t.index()], true, false}});
    for (auto [t, a] : g.output_edges_) pairs.push_back({a.index(), {t, g.tx_timestep_[t.index()], false, true}});
    std::ranges::sort(pairs, [](const auto& x, const auto& y) {
      return std::tie(x.first, x.second.timestep, x.second.tx) < std::tie(y.first, y.second.timestep, y.second.tx);
    });
    std::vector<std::pair<std::size_t, Incidence>> merged;
    merged.reserve(pairs.size());
    for (const auto& p : pairs) {
      if (!merged.empty() && merged.back().first == p.first && merged.back().second.tx == p.second.tx) {
        merged.back().second.input |= p.second.input;
        merged.back().second.output |= p.second.output;
      } else {
        merged.push_back(p);
      }
    }
    build_csr(n_addr, merged, g.addr_offsets_, g.addr_incidences_);

    std::vector<std::pair<std::size_t, AddrHandle>> tx_side;
    tx_side.reserve(merged.size());
    for (const auto& [a, inc] : merged) tx_side.emplace_back(inc.tx.index(), AddrHandle{a});
    std::ranges::sort(tx_side);
    build_csr(n_tx, tx_side, g.tx_addr_offsets_, g.tx_addrs_);
  }

  // Undirected unique tx neighbours.
  {
    std::vector<std::pair<std::size_t, TxHandle>> pairs;
    pairs.reserve(2 * g.txtx_edges_.size());
    for (auto [u, v] : g.txtx_edges_) {
      if (u == v) continue;
      pairs.emplace_back(u.index(), v);
      pairs.emplace_back(v.index(), u);
    }
    std::ranges::sort(pairs);
    auto dup = std::ranges::unique(pairs);
    pairs.erase(dup.begin(), dup.end());
    build_csr(n_tx, pairs, g.tx_nb_offsets_, g.tx_nbs_);
  }

  return std::move(g_);
}

// ---------------------------------------------------------------------------
// Operations

ActiveSet active_set(const LedgerGraph& graph, Timestep t) {
  ActiveSet out;
  out.timestep = t;
  auto txs = graph.txs_at(t);
  out.unknown_timestep = txs.empty();
  for (TxHandle tx : txs) {
    auto addrs = graph.tx_addresses(tx);
    out.members.insert(out.members.end(), addrs.begin(), addrs.end());
  }
  std::ranges::sort(out.members);
  auto dup = std::ranges::unique(out.members);
  out.members.erase(dup.begin(), dup.end());
  return out;
}

std::vector<TxHandle> incident_transactions(const LedgerGraph& graph, AddrHandle a, Horizon horizon,
                                            Direction direction) {
  if (a.index() >= graph.addr_count()) throw ValidationError("unknown address handle");
  std::vector<TxHandle> out;
  for (const Incidence& inc : graph.incidences(a)) {
    if (horizon.contains(inc.timestep) && inc.matches(direction)) out.push_back(inc.tx);
  }
  return out;
}

std::vector<TxHandle> incident_transactions(const LedgerGraph& graph, std::string_view addr_id, Horizon horizon,
                                            Direction direction) {
  return incident_transactions(graph, graph.addr(addr_id), horizon, direction);
}

std::vector<AddrHandle> dedup_addresses(const LedgerGraph& graph, std::span<const Occurrence> occurrences) {
  std::vector<Label> seen(graph.addr_count(), Label::unknown);
  std::vector<bool> present(graph.addr_count(), false);
  std::vector<AddrHandle> out;
  for (const Occurrence& o : occurrences) {
    auto i = o.addr.index();
    if (i >= graph.addr_count()) throw ValidationError("occurrence references unknown address handle");
    if (!present[i]) {
      present[i] = true;
      seen[i] = o.label;
      out.push_back(o.addr);
    } else if (seen[i] != o.label) {
      throw ValidationError("conflicting labels for address '" + graph.addr_id(o.addr) + "'");
    }
  }
  std::ranges::sort(out);
  return out;
}

std::vector<Occurrence> occurrences_in(const LedgerGraph& graph, TimeRange window, const LabelTable* labels) {
  std::vector<Occurrence> out;
  for (std::size_t i = 0; i < graph.addr_count(); ++i) {
    AddrHandle a{i};
    Label l = labels ? labels->at(a) : Label::unknown;
    for (const Incidence& inc : graph.incidences(a)) {
      if (window.contains(inc.timestep)) out.push_back({a, inc.timestep, l});
    }
  }
  return out;
}

std::vector<AddrHandle> split_addresses(const LedgerGraph& graph, TimeRange window) {
  std::vector<AddrHandle> out;
  for (std::size_t i = 0; i < graph.addr_count(); ++i) {
    AddrHandle a{i};
    auto incs = graph.incidences(a);
    if (std::ranges::any_of(incs, [&](const Incidence& inc) { return window.contains(inc.timestep); })) {
      out.push_back(a);
    }
  }
  return out;
}

}  // namespace granq
