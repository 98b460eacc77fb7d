#include <doctest.h>

#include <algorithm>

#include "granq/aggregation.hpp"
#include "granq/error.hpp"
#include "granq/metrics.hpp"
#include "granq/oracle.hpp"
#include "support.hpp"

using namespace granq;

namespace {

std::vector<std::string> ids_of(std::initializer_list<const char*> xs) { return {xs.begin(), xs.end()}; }

real rbo_s(const std::vector<std::string>& a, const std::vector<std::string>& b, real p = 0.9) {
  return rbo<std::string>(a, b, p);
}

// Queue with the given ranked members (scores strictly decreasing).
Queue queue_of(const LedgerGraph& g, std::initializer_list<const char*> members, std::size_t universe) {
  Queue q;
  q.universe_size = universe;
  q.nominal_k = members.size();
  real s = 1.0;
  for (const char* m : members) q.members.emplace_back(g.addr(m), s -= 0.01);
  return q;
}

}  // namespace

TEST_CASE("jaccard examples and properties") {
  auto J = [](std::vector<int> a, std::vector<int> b) { return jaccard_sorted<int>(a, b); };
  CHECK(J({1, 2, 3}, {2, 3, 4}) == 0.5);
  CHECK(J({1, 2}, {1, 2}) == 1.0);
  CHECK(J({1, 2}, {3}) == 0.0);
  SplitMix64 rng(1);
  for (int t = 0; t < 200; ++t) {
    std::set<int> a, b;
    for (int i = 0; i < 10; ++i) {
      a.insert(static_cast<int>(rng.index(15)));
      b.insert(static_cast<int>(rng.index(15)));
    }
    std::vector<int> va(a.begin(), a.end()), vb(b.begin(), b.end());
    const real x = J(va, vb);
    CHECK(x == J(vb, va));
    CHECK((x >= 0 && x <= 1));
    CHECK((x == 1.0) == (a == b));
  }
}

TEST_CASE("rbo examples") {
  CHECK(rbo_s(ids_of({"a", "b"}), ids_of({"b", "a"})) == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(rbo_s(ids_of({"a", "b", "c"}), ids_of({"a", "b", "c"}), 0.3) == 1.0);
  std::vector<std::string> l1, l2;
  for (int i = 0; i < 10; ++i) {
    l1.push_back("x" + std::to_string(i));
    l2.push_back("y" + std::to_string(i));
  }
  CHECK(rbo_s(l1, l2) == 0.0);
  CHECK_THROWS_AS(rbo_s(l1, l2, 1.0), ValidationError);
}

TEST_CASE("rbo symmetry, identity and oracle agreement") {
  SplitMix64 rng(8);
  for (int t = 0; t < 500; ++t) {
    std::vector<std::string> pool;
    for (int i = 0; i < 25; ++i) pool.push_back("n" + std::to_string(i));
    auto draw = [&](std::size_t len) {
      auto p = pool;
      for (std::size_t i = p.size() - 1; i > 0; --i) std::swap(p[i], p[rng.index(i + 1)]);
      p.resize(len);
      return p;
    };
    auto a = draw(1 + rng.index(20)), b = draw(1 + rng.index(20));
    const real p = 0.05 + 0.9 * rng.uniform();
    CHECK(std::abs(rbo_s(a, b, p) - rbo_s(b, a, p)) <= 1e-15);
    CHECK(rbo_s(a, a, p) == 1.0);
    CHECK(std::abs(rbo_s(a, b, p) - oracle::rbo(a, b, p)) <= 1e-12);
  }
}

TEST_CASE("burden examples") {
  std::vector<Label> l(10, Label::unknown);
  l[0] = l[1] = Label::illicit;
  l[2] = l[3] = l[4] = Label::licit;
  auto b = burden_from_labels(l, 8);
  CHECK(b.illicit_per_100 == 20);
  CHECK(b.licit_per_100 == 30);
  CHECK(b.unknown_per_100 == 50);
  REQUIRE(b.reviews_per_tp);
  CHECK(*b.reviews_per_tp == 5);
  CHECK(*b.yield == 0.25);

  auto lo = burden_from_labels(l, 8, true);
  CHECK(lo.k_actual == 5);
  CHECK(lo.illicit_per_100 == 40);

  auto none = burden_from_labels(std::vector<Label>(4, Label::licit), 0);
  CHECK(!none.reviews_per_tp);
  CHECK(!none.yield);
}

TEST_CASE("burden components sum to 100 and match the oracle") {
  SplitMix64 rng(2);
  for (int t = 0; t < 500; ++t) {
    std::vector<Label> l(1 + rng.index(1000));
    std::vector<int> classes;
    for (auto& x : l) {
      x = static_cast<Label>(1 + rng.index(3));
      classes.push_back(static_cast<int>(x));
    }
    const int total = static_cast<int>(std::ranges::count(l, Label::illicit) + rng.index(5));
    auto b = burden_from_labels(l, static_cast<std::size_t>(total));
    CHECK(std::abs(b.illicit_per_100 + b.licit_per_100 + b.unknown_per_100 - 100) <= 1e-9);
    auto o = oracle::burden(classes, total);
    CHECK(std::abs(b.illicit_per_100 - o.illicit_per_100) <= 1e-12);
    CHECK(b.reviews_per_tp.has_value() == o.reviews_per_tp.has_value());
    if (b.yield) CHECK(std::abs(*b.yield - *o.yield) <= 1e-12);
  }
}

TEST_CASE("actor-only illicit rate and fragmentation") {
  auto g = test::make_graph({{"t", 1, {"a", "b", "c", "x", "y"}, {}}});
  LabelTable labels(g.addr_count());
  labels.set(g.addr("a").index(), Label::illicit);
  labels.set(g.addr("x").index(), Label::illicit);
  CHECK(actor_only_illicit_rate(queue_of(g, {"a", "b"}, 5), queue_of(g, {"b", "c"}, 5), labels) == 1.0);
  CHECK(!actor_only_illicit_rate(queue_of(g, {"b"}, 5), queue_of(g, {"b", "c"}, 5), labels));
  CHECK(actor_only_illicit_rate(queue_of(g, {"x", "y", "b"}, 5), queue_of(g, {"b"}, 5), labels) == 0.5);

  auto all = test::all_addrs(g);
  auto q = queue_of(g, {"a", "b", "c", "x"}, 5);
  auto count_for = [&](std::vector<int> c4) {
    std::vector<int> c(g.addr_count(), 1);
    for (int i = 0; i < 4; ++i) c[i] = c4[i];
    return fragmentation(q, all, c);
  };
  CHECK(count_for({1, 2, 3, 1}) == 0.5);
  CHECK(count_for({1, 1, 1, 1}) == 0.0);
  CHECK(count_for({2, 5, 3, 9}) == 1.0);
}

TEST_CASE("novel positives") {
  auto g = test::make_graph({{"t", 1, {"x", "y", "z"}, {}}});
  const auto x = g.addr("x"), y = g.addr("y"), z = g.addr("z");
  std::map<Timestep, std::vector<AddrHandle>> h{{1, {x}}, {2, {x, y, z}}};
  auto r = novel_positive_rate(2, h);
  CHECK(r.novel == 2);
  CHECK(r.total == 3);
  CHECK(*r.rate == doctest::Approx(2.0 / 3));
  CHECK(*novel_positive_rate(1, h).rate == 1.0);
  CHECK(!novel_positive_rate(3, h).rate);

  // first timestep with any illicit always scores 1
  std::map<Timestep, std::vector<AddrHandle>> late{{1, {}}, {2, {}}, {3, {y}}, {4, {y, z}}};
  CHECK(*novel_positive_rate(3, late).rate == 1.0);
  CHECK(*novel_positive_rate(4, late).rate == 0.5);
}

TEST_CASE("decile strata") {
  std::vector<int> distinct(20);
  for (int i = 0; i < 20; ++i) distinct[i] = 100 - i;
  auto d = decile_assignment(distinct);
  std::vector<int> per(10, 0);
  for (int x : d) per[static_cast<std::size_t>(x)]++;
  for (int c : per) CHECK(c == 2);

  // q = 1; each tie group takes the decile of its first member
  std::vector<int> ties{5, 5, 5, 4, 4, 3, 3, 2, 2, 1, 1, 1};
  auto dt = decile_assignment(ties);
  CHECK(dt[0] == dt[1]);
  CHECK(dt[1] == dt[2]);
  CHECK(dt[9] == dt[11]);
  CHECK(*std::max_element(dt.begin(), dt.end()) <= 9);
}

TEST_CASE("degree strata partition the universe") {
  SplitMix64 rng(3);
  std::vector<test::TxSpec> txs;
  for (int i = 0; i < 400; ++i) {
    test::TxSpec s{"t" + std::to_string(i), 1, {"a" + std::to_string(rng.index(150))}, {}};
    txs.push_back(s);
  }
  auto g = test::make_graph(txs);
  auto u = active_set(g, 1).members;
  auto counts = activity_count(g, u, Horizon::exact(1));
  auto tx = ScoreTable::empty(Level::actor, Stage::platt, "main", g.addr_count());
  auto actor = tx;
  for (AddrHandle a : u) {
    tx.set(a.index(), rng.uniform());
    actor.set(a.index(), rng.uniform());
  }
  auto strata = degree_strata(g, u, counts, tx, actor, 0.1);
  std::size_t total = 0;
  bool has_exact = false;
  for (const auto& s : strata) {
    if (s.index == 0) {
      has_exact = true;
      CHECK(s.min_count == 1);
      CHECK(s.max_count == 1);
    } else {
      total += s.universe_size;
    }
  }
  CHECK(total == u.size());
  CHECK(has_exact);
}

TEST_CASE("ablation verdict") {
  CHECK(ablation_verdict(std::vector<real>{0.061, 0.051, 0.082}) == Verdict::granularity_driven);
  CHECK(ablation_verdict(std::vector<real>{0.9, 0.95}) == Verdict::information_driven);
  CHECK(ablation_verdict(std::vector<real>{0.5, 0.9}) == Verdict::mixed);
  std::vector<real> v{0.5, 0.81, 0.2, 0.99};
  const auto first = ablation_verdict(v);
  std::ranges::sort(v);
  do {
    CHECK(ablation_verdict(v) == first);
  } while (std::ranges::next_permutation(v).found);
}

TEST_CASE("means") {
  std::vector<real> x{0.2, 0.4}, k{1, 3};
  CHECK(arithmetic_mean(x) == doctest::Approx(0.3));
  CHECK(k_weighted_mean(x, k) == doctest::Approx(0.35));
}
