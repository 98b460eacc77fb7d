#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "granq/aggregation.hpp"
#include "granq/hybrid.hpp"
#include "granq/ingest.hpp"
#include "granq/ledger.hpp"

namespace granq {

struct RegimeScores {
  std::string name;
  std::filesystem::path tx;     // transaction scores, projected over the test window
  std::filesystem::path actor;  // static actor scores
};

struct ScoreFiles {
  std::optional<std::filesystem::path> tx;          // every transaction, any split
  Stage tx_stage = Stage::raw;
  std::optional<std::string> actor_temporal;        // path template containing "{t}"
  std::optional<std::filesystem::path> actor_static;
  std::optional<std::filesystem::path> actor_validation;
  Stage actor_stage = Stage::raw;

  std::filesystem::path actor_at(Timestep t) const;
};

// Everything a run needs. Defaults mirror the reference study: budget 1%,
// noisy-OR over both directions, RBO persistence 0.9, n_cap 1, m 5, 1000
// resamples seeded from 0.
struct RunConfig {
  std::filesystem::path base_dir = ".";  // relative paths resolve here, then under GRANQ_DATA_DIR
  std::optional<std::filesystem::path> cache;
  DataPaths data;
  std::optional<std::string> value_column;  // tx feature name used as "value" for low-info features
  SplitSpec split;

  std::vector<real> budget_fractions{0.01};
  Operator primary_operator = Operator::noisy_or;
  Direction direction = Direction::both;
  real rbo_persistence = 0.9;
  real n_cap = 1.0;
  int top_m = 5;
  std::vector<Operator> operator_sweep{std::begin(kAllOperators), std::end(kAllOperators)};
  std::vector<Direction> direction_sweep{Direction::input, Direction::output, Direction::both};
  bool strata = true;
  real brier_gate = 0.10;

  std::size_t bootstrap_resamples = 1000;
  std::uint64_t seed_base = 0;
  unsigned threads = 1;
  real ci_level = 95;

  ScoreFiles scores;

  bool hybrid_enabled = true;
  bool hybrid_tune = true;
  HybridParams hybrid_params{0.9, 0.3};
  std::vector<real> hybrid_alpha_grid{0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<real> hybrid_delta_grid{0.1, 0.2, 0.3, 0.4, 0.5};

  std::vector<RegimeScores> ablation_regimes;
  real ablation_threshold = 0.80;

  real primary_budget() const { return budget_fractions.front(); }
  void validate() const;

  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& toml_path);
  // Snapshot for the report (paths as written, no timestamps).
  nlohmann::ordered_json to_json() const;
};

// Resolves `p` against base_dir; falls back to $GRANQ_DATA_DIR/p when the
// first candidate does not exist.
std::filesystem::path resolve_path(const std::filesystem::path& base_dir, const std::filesystem::path& p);

}  // namespace granq
