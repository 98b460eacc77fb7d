#include <doctest.h>

#include <algorithm>
#include <set>

#include "granq/error.hpp"
#include "granq/hybrid.hpp"
#include "granq/queueing.hpp"
#include "support.hpp"

using namespace granq;

namespace {

PairedUniverse paired(std::vector<double> tx, std::vector<double> actor, std::vector<Label> labels) {
  PairedUniverse u;
  u.tx = Eigen::Map<VectorXr>(tx.data(), static_cast<Eigen::Index>(tx.size()));
  u.actor = Eigen::Map<VectorXr>(actor.data(), static_cast<Eigen::Index>(actor.size()));
  u.labels = std::move(labels);
  for (std::size_t i = 0; i < tx.size(); ++i) u.keys.push_back(static_cast<std::uint32_t>(i));
  return u;
}

std::set<Eigen::Index> as_set(const std::vector<Eigen::Index>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("consensus score") {
  CHECK(consensus_score(0.81, 0.49) == doctest::Approx(0.63).epsilon(1e-15));
  CHECK(consensus_score(0.3, 0.3) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(consensus_score(0.0, 0.7) == 0.0);
  SplitMix64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const real a = rng.uniform(), b = rng.uniform();
    CHECK(consensus_score(a, b) == consensus_score(b, a));
    CHECK(consensus_score(a, b) <= std::max(a, b));
  }
}

TEST_CASE("slot split") {
  SplitMix64 rng(2);
  auto u = paired(test::random_scores(rng, 100), test::random_scores(rng, 100), std::vector<Label>(100, Label::licit));
  auto s = select_hybrid(u.tx, u.actor, u.keys, 10, {0.9, 0.3});
  CHECK(s.consensus_slots == 9);
  CHECK(s.escalation_slots == 1);

  auto none = select_hybrid(u.tx, u.actor, u.keys, 10, {0.5, 1.0});
  CHECK(none.qualified == 0);
  CHECK(none.escalation_fallback);
  CHECK(none.rows().size() >= 10);
  CHECK_THROWS_AS((HybridParams{0.0, 0.3}.validate()), ValidationError);
  CHECK_THROWS_AS((HybridParams{0.5, 1.5}.validate()), ValidationError);
}

TEST_CASE("four-address hand example") {
  // a: tx .9 actor .8; b: .1/.9; c: .5/.5; d: .5/.1
  auto u = paired({0.9, 0.1, 0.5, 0.5}, {0.8, 0.9, 0.5, 0.1}, std::vector<Label>(4, Label::unknown));
  auto s = select_hybrid(u.tx, u.actor, u.keys, 2, {0.5, 0.3});
  // consensus: a = sqrt(.72) = .8485, c = .5, b = .3, d = .2236 -> a
  CHECK(s.consensus == std::vector<Eigen::Index>{0});
  // remaining b, c, d with |diff| .8, 0, .4 -> b and d qualify; max score b .9 beats d .5
  CHECK(s.qualified == 2);
  CHECK(s.escalation == std::vector<Eigen::Index>{1});
  CHECK(!s.escalation_fallback);
  CHECK(as_set(s.rows()) == std::set<Eigen::Index>{0, 1});

  auto g = test::make_graph({{"t", 1, {"a", "b", "c", "d"}, {}}});
  auto tx = test::addr_table(g, {{"a", 0.9}, {"b", 0.1}, {"c", 0.5}, {"d", 0.5}});
  auto actor = test::addr_table(g, {{"a", 0.8}, {"b", 0.9}, {"c", 0.5}, {"d", 0.1}});
  auto hq = hybrid_queue(g, tx, actor, test::all_addrs(g), 0.5, {0.5, 0.3});
  auto r = hq.queue.ranked();
  REQUIRE(r.size() == 2);
  CHECK(g.addr_id(r[0]) == "a");
  CHECK(g.addr_id(r[1]) == "b");
}

TEST_CASE("hybrid invariants on random instances") {
  SplitMix64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 20 + rng.index(300);
    const int levels = t % 2 ? 8 : 0;
    auto u = paired(test::random_scores(rng, n, levels), test::random_scores(rng, n, levels),
                    std::vector<Label>(n, Label::licit));
    const std::size_t k = 1 + rng.index(n / 4);

    // alpha = 1 is plain consensus top-K
    auto all = select_hybrid(u.tx, u.actor, u.keys, k, {1.0, 0.3});
    VectorXr c(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = static_cast<Eigen::Index>(i);
      c[j] = consensus_score(u.tx[j], u.actor[j]);
    }
    CHECK(all.rows() == select_top_k(c, u.keys, k));
    CHECK(all.escalation.empty());

    const HybridParams p{0.1 + 0.9 * rng.uniform(), rng.uniform()};
    auto s = select_hybrid(u.tx, u.actor, u.keys, k, p);
    auto cs = as_set(s.consensus), es = as_set(s.escalation);
    for (auto r : es) CHECK(!cs.count(r));
    CHECK(cs.size() + es.size() >= k);
    CHECK(s.consensus_slots + s.escalation_slots == k);
  }
}

TEST_CASE("grid search") {
  // Ten illicit rows agree at .8; ninety licit rows disagree sharply. Every
  // escalation slot costs one illicit hit. The consensus tie group keeps all
  // ten illicit rows, so alpha=0.9 gives 10 of 11.
  std::vector<double> tx, actor;
  std::vector<Label> labels;
  for (int i = 0; i < 10; ++i) {
    tx.push_back(0.8);
    actor.push_back(0.8);
    labels.push_back(Label::illicit);
  }
  for (int i = 0; i < 90; ++i) {
    tx.push_back(0.95 - 0.001 * i);
    actor.push_back(0.05);
    labels.push_back(Label::licit);
  }
  auto u = paired(tx, actor, labels);
  std::vector<real> alphas{0.5, 0.6, 0.7, 0.8, 0.9}, deltas{0.1, 0.2, 0.3, 0.4, 0.5};
  auto r = grid_search(u, 0.1, alphas, deltas);
  CHECK(r.best.params.alpha == 0.9);
  CHECK(r.best.params.delta == 0.1);
  CHECK(r.best.top_k_illicit_fraction == doctest::Approx(10.0 / 11));
  CHECK(r.surface.size() == 25);
  for (const auto& cell : r.surface) CHECK(cell.top_k_illicit_fraction <= r.best.top_k_illicit_fraction);

  // enumeration order does not matter
  std::vector<real> ra(alphas.rbegin(), alphas.rend()), rd{0.3, 0.5, 0.1, 0.4, 0.2};
  auto r2 = grid_search(u, 0.1, ra, rd);
  CHECK(r2.best.params.alpha == r.best.params.alpha);
  CHECK(r2.best.params.delta == r.best.params.delta);

  auto one = grid_search(u, 0.1, std::vector<real>{0.7}, std::vector<real>{0.2});
  CHECK(one.best.params.alpha == 0.7);
  CHECK(one.best.params.delta == 0.2);
}

TEST_CASE("hybrid evaluation edge cases") {
  BootstrapOptions o{100, 0, 1, 95};
  // identical levels: hybrid picks the same rows as both singles
  auto same = paired({0.9, 0.8, 0.1, 0.2}, {0.9, 0.8, 0.1, 0.2}, {Label::illicit, Label::licit, Label::licit, Label::illicit});
  // no illicit anywhere
  auto dead = paired({0.9, 0.8, 0.1, 0.2}, {0.1, 0.2, 0.9, 0.8}, std::vector<Label>(4, Label::licit));
  std::vector<TimestepUniverse> steps{{1, same}, {2, dead}};
  auto ev = evaluate_hybrid(steps, 0.5, {1.0, 0.3}, o);
  REQUIRE(ev.rows.size() == 2);
  CHECK(ev.rows[0].improvement == 0.0);
  CHECK(ev.rows[0].hybrid_yield == 0.5);
  CHECK(ev.rows[1].improvement == 0.0);
  CHECK(ev.rows[1].best_single == 0.0);
  CHECK(ev.mean_improvement == 0.0);
  CHECK(*ev.improvement_ci.ci_low == 0.0);
}
