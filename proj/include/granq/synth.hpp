#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "granq/ledger.hpp"
#include "granq/scores.hpp"
#include "granq/types.hpp"

namespace granq {

enum class Regime { tx_dominant, actor_dominant, dead };
std::string_view to_string(Regime r);
Regime parse_regime(std::string_view s);

struct DegreeDistribution {
  enum class Kind { uniform, zipf };
  Kind kind = Kind::uniform;
  int k_min = 1;  // uniform bounds, also the zipf support start
  int k_max = 4;  // zipf support end
  real s = 1.5;   // zipf exponent
};

// Synthetic scenario. Lists shorter than n_timesteps repeat cyclically.
struct ScenarioSpec {
  int n_timesteps = 10;
  int addrs_per_timestep = 200;
  int txs_per_timestep = 150;
  std::vector<real> illicit_prevalence{0.1};
  DegreeDistribution degree;  // addresses per transaction
  std::vector<Regime> regime_schedule{Regime::tx_dominant};
  std::uint64_t seed = 0;
  real carry_over = 0.1;  // share of the previous timestep's addresses reused
  real signal = 1.8124;   // mean shift of the informative scorer (AUC ~0.9 at unit noise)
  real offset = 2.0;      // logit offset keeping base scores small
  real unknown_fraction = 0.3;   // observed label hidden (class 3) with this probability
  real missing_fraction = 0.0;   // tx feature cells written blank in CSV output
  int tx_features = 3;    // column 0 is a positive "value"
  std::vector<std::string> extra_regimes;  // ablation score variants to emit

  void validate() const;
  real prevalence_at(Timestep t) const;
  Regime regime_at(Timestep t) const;
  // Split derived from the timestep count (or the fixed 1-34/35-39/40-49
  // split when there are at least 49 timesteps).
  SplitSpec default_split() const;

  static ScenarioSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SyntheticLedger {
  LedgerGraph graph;
  LabelTable tx_labels;
  LabelTable addr_labels;
  ScoreTable tx_scores;                       // raw, every transaction
  std::map<Timestep, ScoreTable> actor_scores;  // raw, active set of each timestep
  SplitSpec split;
};

// Deterministic in spec.seed. The dominant level's scorer draws
// logistic(signal * y + z - offset) with z ~ N(0,1); the other level draws
// logistic(z - offset). Dead timesteps use noise at both levels.
SyntheticLedger generate(const ScenarioSpec& spec);

// Actor scores for every address incident in the window: the score at the
// address's latest active timestep inside the window.
ScoreTable window_actor_scores(const SyntheticLedger& s, TimeRange window);

// Writes the ingest CSV schemas, score files and a run.toml into `dir`.
void write_scenario(const SyntheticLedger& s, const ScenarioSpec& spec, const std::filesystem::path& dir);

}  // namespace granq
