#include <doctest.h>

#include "granq/aggregation.hpp"
#include "granq/error.hpp"
#include "granq/oracle.hpp"
#include "support.hpp"

using namespace granq;

namespace {

VectorXr vec(std::initializer_list<double> xs) {
  VectorXr v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

VectorXr vec(const std::vector<double>& xs) { return Eigen::Map<const VectorXr>(xs.data(), static_cast<Eigen::Index>(xs.size())); }

}  // namespace

TEST_CASE("operator examples") {
  CHECK(noisy_or(vec({0.5, 0.5})) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(capped_sum(vec({0.4, 0.3}), 1.0) == doctest::Approx(0.7));
  CHECK(capped_sum(vec({0.8, 0.9}), 1.0) == 1.0);
  CHECK(top_m_mean(vec({0.9, 0.1, 0.1, 0.1, 0.1, 0.1}), 5) == doctest::Approx(0.26));
  for (double s : {0.0, 1e-9, 0.3, 0.77, 1.0}) {
    CHECK(noisy_or(vec({s})) == s);
    CHECK(max_score(vec({s})) == s);
    CHECK(capped_sum(vec({s}), 1.0) == s);
    CHECK(top_m_mean(vec({s}), 5) == s);
  }
  CHECK(noisy_or(vec({0.2, 1.0, 0.3})) == 1.0);
  CHECK(parse_operator("noisy_or") == Operator::noisy_or);
  CHECK_THROWS_AS(parse_operator("mean"), ValidationError);
}

TEST_CASE("operator properties on random multisets") {
  SplitMix64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto n = 1 + rng.index(trial % 10 == 0 ? 5000 : 30);
    auto s = test::random_scores(rng, n, trial % 3 == 0 ? 10 : 0);
    const auto v = vec(s);
    const double no = noisy_or(v), mx = max_score(v), cs = capped_sum(v, 1.0), tm = top_m_mean(v, 5);
    CHECK(no >= mx);
    CHECK(mx >= tm);
    CHECK(cs >= mx);
    for (double x : {no, mx, cs, tm}) CHECK((x >= 0 && x <= 1));

    const double extra = 1e-6 + (1 - 1e-6) * rng.uniform();
    s.push_back(extra);
    const auto w = vec(s);
    CHECK(noisy_or(w) >= no);
    CHECK(max_score(w) >= mx);
    CHECK(capped_sum(w, 1.0) >= cs);
  }
}

TEST_CASE("operators agree with the literal oracles") {
  SplitMix64 rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    auto s = test::random_scores(rng, 1 + rng.index(200));
    const auto v = vec(s);
    CHECK(std::abs(noisy_or(v) - oracle::noisy_or(s)) <= 1e-12);
    CHECK(max_score(v) == oracle::max_score(s));
    CHECK(std::abs(capped_sum(v, 2.5) - oracle::capped_sum(s, 2.5)) <= 1e-12);
    CHECK(std::abs(top_m_mean(v, 3) - oracle::top_m_mean(s, 3)) <= 1e-12);
  }
}

TEST_CASE("noisy-or stays in range for very high degree") {
  std::vector<double> s(10000, 0.999);
  CHECK(noisy_or(vec(s)) <= 1.0);
  std::vector<double> tiny(10000, 1e-18);
  const double v = noisy_or(vec(tiny));
  CHECK(v >= 1e-18);
  CHECK(v == doctest::Approx(1e-14).epsilon(1e-6));
}

TEST_CASE("projection by direction") {
  // t1 has a on both sides; t2 is input-only for a; t3 output-only.
  auto g = test::make_graph({{"t1", 1, {"a"}, {"a"}}, {"t2", 1, {"a"}, {"b"}}, {"t3", 1, {"c"}, {"a"}}});
  auto tx = ScoreTable::empty(Level::transaction, Stage::platt, "main", g.tx_count());
  tx.set(g.tx("t1").index(), 0.5);
  tx.set(g.tx("t2").index(), 0.2);
  tx.set(g.tx("t3").index(), 0.4);
  auto a = g.addr("a");
  std::vector<AddrHandle> u{a};
  auto proj = [&](Direction d, Operator op) {
    return project_scores(g, tx, {op, d, Horizon::exact(1), 1.0, 5}, u).scores[a.index()];
  };
  CHECK(proj(Direction::input, Operator::capped_sum) == doctest::Approx(0.7));
  CHECK(proj(Direction::output, Operator::capped_sum) == doctest::Approx(0.9));
  // Both: union {t1, t2, t3}, t1 counted once.
  CHECK(proj(Direction::both, Operator::capped_sum) == 1.0);
  CHECK(proj(Direction::both, Operator::noisy_or) == doctest::Approx(1 - 0.5 * 0.8 * 0.6));

  auto r = project_scores(g, tx, {Operator::max_score, Direction::both, Horizon::exact(1), 1.0, 5}, u);
  REQUIRE(r.incident_counts.size() == 1);
  CHECK(r.incident_counts[0] == 3);

  // Address b has only an output-side transaction: excluded under input.
  std::vector<AddrHandle> ub{g.addr("b")};
  auto rb = project_scores(g, tx, {Operator::max_score, Direction::input, Horizon::exact(1), 1.0, 5}, ub);
  CHECK(rb.excluded.size() == 1);
  CHECK(rb.projected.empty());
}

TEST_CASE("projection requires scores for every transaction in the horizon") {
  auto g = test::make_graph({{"t1", 1, {"a"}, {}}, {"t2", 1, {"a"}, {}}});
  auto tx = ScoreTable::empty(Level::transaction, Stage::platt, "main", g.tx_count());
  tx.set(0, 0.3);
  std::vector<AddrHandle> u{g.addr("a")};
  CHECK_THROWS_AS(project_scores(g, tx, {}, u), ValidationError);
}

TEST_CASE("path A features") {
  LedgerGraph::Builder b;
  auto t1 = b.add_tx("t1", 20);
  auto t2 = b.add_tx("t2", 30);
  auto t3 = b.add_tx("t3", 30);
  b.add_input_edge(b.intern_addr("old"), t1);
  b.add_input_edge(b.intern_addr("pair"), t2);
  b.add_output_edge(t3, b.intern_addr("pair"));
  MatrixXr f(3, 2);
  f << 5, 5, 1, 0, 3, 0;
  b.set_tx_features(f, {"x", "y"});
  auto g = std::move(b).build();

  std::vector<AddrHandle> u{g.addr("old"), g.addr("pair")};
  auto table = path_a_features(g, u, 34);
  REQUIRE(table.rows.cols() == 4);  // F_tx + 2
  REQUIRE(table.addrs.size() == 2);
  for (std::size_t i = 0; i < table.addrs.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (table.addrs[i] == g.addr("old")) {
      CHECK(table.rows(r, 3) == 14);  // 34 - 20
      CHECK(table.rows(r, 2) == 1);
    } else {
      CHECK(table.rows(r, 0) == 2);
      CHECK(table.rows(r, 1) == 0);
      CHECK(table.rows(r, 2) == 2);
    }
  }
  auto active = active_set(g, 30);
  auto now = path_a_features(g, active.members, 30);
  for (Eigen::Index r = 0; r < now.rows.rows(); ++r) CHECK(now.rows(r, 3) == 0);
  // Horizon before any activity: no rows.
  CHECK(path_a_features(g, u, 10).addrs.empty());
}

TEST_CASE("low-information features") {
  LedgerGraph::Builder b;
  auto t1 = b.add_tx("t1", 1);
  auto t2 = b.add_tx("t2", 3);
  auto lone = b.add_tx("lone", 2);
  auto n1 = b.add_tx("n1", 2);
  auto n2 = b.add_tx("n2", 2);
  b.add_input_edge(b.intern_addr("a"), t1);
  b.add_output_edge(t2, b.intern_addr("a"));
  b.add_txtx_edge(n1, n2);
  MatrixXr f(5, 1);
  f << 2, 4, 7, 1, 5;
  b.set_tx_features(f, {"value"});
  auto g = std::move(b).build();

  auto actor = low_info_features(g, Level::actor, Horizon::cumulative(3), 0);
  const auto ra = static_cast<Eigen::Index>(g.addr("a").index());
  CHECK(actor(ra, 0) == 2);
  CHECK(actor(ra, 1) == 6);
  CHECK(actor(ra, 2) == 3);
  CHECK(actor(ra, 3) == 2);

  auto tx = low_info_features(g, Level::transaction, Horizon::cumulative(3), 0);
  const auto rl = static_cast<Eigen::Index>(lone.index());
  for (int c = 0; c < 4; ++c) CHECK(tx(rl, c) == 0);
  const auto rn = static_cast<Eigen::Index>(n1.index());
  CHECK(tx(rn, 0) == 1);
  CHECK(tx(rn, 1) == 5);
  CHECK(tx(rn, 2) == 5);
  CHECK(tx(rn, 3) == 2);
}

TEST_CASE("activity counts") {
  auto g = test::make_graph({{"t1", 4, {"a"}, {}}, {"t2", 4, {}, {"a"}}, {"t3", 4, {}, {"a", "b"}}, {"t4", 5, {"c"}, {}}});
  std::vector<AddrHandle> u{g.addr("a"), g.addr("c")};
  auto c = activity_count(g, u, Horizon::exact(4));
  CHECK(c == std::vector<int>{3, 0});
  auto w = activity_count(g, u, Horizon::window({4, 5}));
  CHECK(w == std::vector<int>{3, 1});
}
