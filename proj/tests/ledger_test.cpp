#include <doctest.h>

#include <algorithm>
#include <set>

#include "granq/error.hpp"
#include "granq/ledger.hpp"
#include "support.hpp"

using namespace granq;

TEST_CASE("active set of a one-transaction graph") {
  auto g = test::make_graph({{"x", 5, {"a"}, {"b"}}});
  auto s = active_set(g, 5);
  REQUIRE(s.members.size() == 2);
  CHECK(g.addr_id(s.members[0]) == "a");
  CHECK(g.addr_id(s.members[1]) == "b");
  CHECK(active_set(g, 6).members.empty());
  CHECK(active_set(g, 6).unknown_timestep);
}

TEST_CASE("incident transactions respect horizon and side") {
  auto g = test::make_graph({{"t3", 3, {"a"}, {}}, {"t7", 7, {}, {"a"}}});
  auto ids = [&](std::vector<TxHandle> v) {
    std::vector<std::string> out;
    for (auto h : v) out.push_back(g.tx_id(h));
    return out;
  };
  CHECK(ids(incident_transactions(g, "a", Horizon::cumulative(5), Direction::both)) == std::vector<std::string>{"t3"});
  CHECK(incident_transactions(g, "a", Horizon::exact(7), Direction::input).empty());
  CHECK(ids(incident_transactions(g, "a", Horizon::window({1, 10}), Direction::both)) ==
        std::vector<std::string>{"t3", "t7"});
  CHECK_THROWS_AS(incident_transactions(g, "zz", Horizon::exact(1), Direction::both), ValidationError);
}

TEST_CASE("dedup of occurrences") {
  auto g = test::make_graph({{"t1", 1, {"a"}, {"b"}}, {"t2", 2, {"a"}, {}}});
  const auto a = g.addr("a"), b = g.addr("b");
  std::vector<Occurrence> occ{{a, 1}, {a, 2}, {b, 1}};
  auto d = dedup_addresses(g, occ);
  CHECK(d == std::vector<AddrHandle>{a, b});
  CHECK(dedup_addresses(g, std::vector<Occurrence>{}).empty());
  std::vector<Occurrence> clash{{a, 1, Label::illicit}, {a, 2, Label::licit}};
  CHECK_THROWS_AS(dedup_addresses(g, clash), ValidationError);
}

TEST_CASE("ledger invariants on random graphs") {
  SplitMix64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<test::TxSpec> txs;
    const int n_tx = 1 + static_cast<int>(rng.index(40));
    for (int i = 0; i < n_tx; ++i) {
      test::TxSpec s{"t" + std::to_string(i), 1 + static_cast<Timestep>(rng.index(6)), {}, {}};
      const auto k = 1 + rng.index(3);
      for (std::uint64_t j = 0; j < k; ++j) {
        auto id = "a" + std::to_string(rng.index(30));
        if (rng.bernoulli(0.5)) s.inputs.push_back(id);
        else s.outputs.push_back(id);
      }
      txs.push_back(s);
    }
    auto g = test::make_graph(txs);

    std::size_t total = 0;
    for (Timestep t = g.min_timestep(); t <= g.max_timestep(); ++t) total += g.txs_at(t).size();
    CHECK(total == g.tx_count());

    auto all = dedup_addresses(g, occurrences_in(g, {g.min_timestep(), g.max_timestep()}));
    std::set<AddrHandle> universe(all.begin(), all.end());
    for (Timestep t = g.min_timestep(); t <= g.max_timestep(); ++t) {
      for (AddrHandle a : active_set(g, t).members) {
        CHECK(universe.count(a));
        CHECK(!incident_transactions(g, a, Horizon::exact(t), Direction::both).empty());
      }
    }

    for (std::size_t i = 0; i < g.addr_count(); ++i) {
      AddrHandle a(i);
      const Horizon h = Horizon::window({g.min_timestep(), g.max_timestep()});
      auto in = incident_transactions(g, a, h, Direction::input);
      auto out = incident_transactions(g, a, h, Direction::output);
      auto both = incident_transactions(g, a, h, Direction::both);
      std::set<TxHandle> u(in.begin(), in.end());
      u.insert(out.begin(), out.end());
      CHECK(both.size() == u.size());
      CHECK(std::set<TxHandle>(both.begin(), both.end()) == u);
    }
  }
}

TEST_CASE("address id rank is ascending string order") {
  auto g = test::make_graph({{"t1", 1, {"zeta", "alpha"}, {"mid"}}});
  auto rank = g.addr_id_rank();
  CHECK(rank[g.addr("alpha").index()] == 0);
  CHECK(rank[g.addr("mid").index()] == 1);
  CHECK(rank[g.addr("zeta").index()] == 2);
}

TEST_CASE("split windows must be ordered") {
  SplitSpec ok;
  CHECK_NOTHROW(ok.validate());
  SplitSpec overlap{{1, 10}, {10, 12}, {13, 20}};
  CHECK_THROWS_AS(overlap.validate(), ValidationError);
  SplitSpec reversed{{5, 6}, {1, 2}, {7, 8}};
  CHECK_THROWS_AS(reversed.validate(), ValidationError);
}
