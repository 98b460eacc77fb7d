#pragma once

#include <filesystem>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "granq/ledger.hpp"
#include "granq/rng.hpp"
#include "granq/scores.hpp"

namespace test {

inline std::filesystem::path fixture_dir() { return std::filesystem::path(GRANQ_FIXTURE_DIR); }

// Edge spec: (tx id, timestep, inputs, outputs).
struct TxSpec {
  std::string id;
  granq::Timestep t;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

inline granq::LedgerGraph make_graph(const std::vector<TxSpec>& txs) {
  granq::LedgerGraph::Builder b;
  for (const auto& s : txs) {
    auto tx = b.add_tx(s.id, s.t);
    for (const auto& a : s.inputs) b.add_input_edge(b.intern_addr(a), tx);
    for (const auto& a : s.outputs) b.add_output_edge(tx, b.intern_addr(a));
  }
  return std::move(b).build();
}

// n addresses "a000".."a{n-1}", one transaction each at t=1.
inline granq::LedgerGraph star_graph(std::size_t n) {
  granq::LedgerGraph::Builder b;
  for (std::size_t i = 0; i < n; ++i) {
    char id[24];
    std::snprintf(id, sizeof id, "a%04zu", i);
    auto tx = b.add_tx("t" + std::string(id + 1), 1);
    b.add_input_edge(b.intern_addr(id), tx);
  }
  return std::move(b).build();
}

inline granq::ScoreTable addr_table(const granq::LedgerGraph& g, const std::map<std::string, double>& scores) {
  auto t = granq::ScoreTable::empty(granq::Level::actor, granq::Stage::platt, "main", g.addr_count());
  for (const auto& [id, s] : scores) t.set(g.addr(id).index(), s);
  return t;
}

inline std::vector<granq::AddrHandle> all_addrs(const granq::LedgerGraph& g) {
  std::vector<granq::AddrHandle> out;
  for (std::size_t i = 0; i < g.addr_count(); ++i) out.emplace_back(i);
  return out;
}

inline std::vector<double> random_scores(granq::SplitMix64& rng, std::size_t n, int levels = 0) {
  std::vector<double> s(n);
  for (auto& x : s) {
    x = rng.uniform();
    if (levels > 0) x = std::floor(x * levels) / levels;  // coarse grid forces ties
  }
  return s;
}

}  // namespace test
