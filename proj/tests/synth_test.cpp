#include <doctest.h>

#include <fstream>
#include <sstream>

#include "granq/aggregation.hpp"
#include "granq/error.hpp"
#include "granq/metrics.hpp"
#include "granq/queueing.hpp"
#include "granq/synth.hpp"
#include "support.hpp"

using namespace granq;
namespace fs = std::filesystem;

namespace {

struct StepQueues {
  Queue tx;
  Queue actor;
  std::size_t illicit = 0;
};

StepQueues queues_at(const SyntheticLedger& s, Timestep t, real beta) {
  const auto& g = s.graph;
  auto u = active_set(g, t).members;
  auto p = project_scores(g, s.tx_scores, {Operator::noisy_or, Direction::both, Horizon::exact(t), 1.0, 5}, u);
  StepQueues q{top_k(g, p.scores, u, beta, true), top_k(g, s.actor_scores.at(t), u, beta), 0};
  for (AddrHandle a : u) q.illicit += s.addr_labels.at(a) == Label::illicit;
  return q;
}

real illicit_fraction(const Queue& q, const LabelTable& labels) {
  return burden(q, labels, 1).illicit_per_100 / 100;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("spec validation and cycling") {
  ScenarioSpec s;
  s.regime_schedule = {Regime::actor_dominant, Regime::tx_dominant};
  s.illicit_prevalence = {0.1, 0.2, 0.3};
  CHECK(s.regime_at(1) == Regime::actor_dominant);
  CHECK(s.regime_at(4) == Regime::tx_dominant);
  CHECK(s.prevalence_at(4) == 0.1);
  CHECK_NOTHROW(s.validate());

  ScenarioSpec bad;
  bad.degree.k_min = 5;
  bad.degree.k_max = 2;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  ScenarioSpec neg;
  neg.illicit_prevalence = {1.5};
  CHECK_THROWS_AS(neg.validate(), ValidationError);

  ScenarioSpec big;
  big.n_timesteps = 49;
  CHECK(big.default_split().test == TimeRange{40, 49});

  auto round = ScenarioSpec::from_json(s.to_json());
  CHECK(round.to_json() == s.to_json());
}

TEST_CASE("dead regime queues find illicit at the base rate") {
  ScenarioSpec spec;
  spec.n_timesteps = 3;
  spec.regime_schedule = {Regime::dead};
  spec.unknown_fraction = 0;
  spec.illicit_prevalence = {0.2};
  real tx_sum = 0, actor_sum = 0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    spec.seed = seed;
    auto s = generate(spec);
    for (Timestep t = 1; t <= 3; ++t) {
      auto q = queues_at(s, t, 0.1);
      tx_sum += illicit_fraction(q.tx, s.addr_labels);
      actor_sum += illicit_fraction(q.actor, s.addr_labels);
      ++n;
    }
  }
  CHECK(std::abs(tx_sum / n - 0.2) <= 0.03);
  CHECK(std::abs(actor_sum / n - 0.2) <= 0.03);
}

TEST_CASE("actor-dominant timesteps favour the actor queue") {
  ScenarioSpec spec;
  spec.n_timesteps = 3;
  spec.regime_schedule = {Regime::actor_dominant};
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    spec.seed = seed;
    auto s = generate(spec);
    auto q = queues_at(s, 1, 0.1);
    auto lt = burden(q.tx, s.addr_labels, q.illicit), la = burden(q.actor, s.addr_labels, q.illicit);
    wins += la.yield.value_or(0) > lt.yield.value_or(0);
  }
  CHECK(wins >= 95);
}

TEST_CASE("generation is deterministic") {
  ScenarioSpec spec;
  spec.n_timesteps = 4;
  spec.seed = 42;
  spec.missing_fraction = 0.05;
  spec.extra_regimes = {"low_info"};
  auto a = fs::temp_directory_path() / "granq_synth_a";
  auto b = fs::temp_directory_path() / "granq_synth_b";
  fs::remove_all(a);
  fs::remove_all(b);
  write_scenario(generate(spec), spec, a);
  write_scenario(generate(spec), spec, b);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++files;
    CHECK(slurp(e.path()) == slurp(b / fs::relative(e.path(), a)));
  }
  CHECK(files >= 12);
  CHECK(fs::exists(a / "scores" / "low_info_tx.csv"));

  auto s = generate(spec);
  for (Timestep t = 1; t <= 4; ++t) {
    CHECK(!active_set(s.graph, t).members.empty());
    CHECK(s.actor_scores.at(t).covered() == active_set(s.graph, t).members.size());
  }
  CHECK(s.tx_scores.covered() == s.graph.tx_count());
}
