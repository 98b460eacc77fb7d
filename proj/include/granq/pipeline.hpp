#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "granq/calibration.hpp"
#include "granq/config.hpp"
#include "granq/ingest.hpp"
#include "granq/queueing.hpp"
#include "granq/resampling.hpp"

namespace granq {

inline constexpr const char* kVersion = "1.0.0";

struct PipelineBlocks {
  bool temporal = true;
  bool static_split = true;
  bool hybrid = true;
  bool ablation = true;
};

struct CalibrationFit {
  Level level = Level::transaction;
  std::optional<SigmoidParams> params;  // absent when scores arrive calibrated
  std::size_t samples = 0;
  std::size_t positives = 0;
  real brier_raw = 0;
  real brier_platt = 0;
  real ece_raw = 0;
  real ece_platt = 0;
  // A fitted map that is not increasing would reverse the ranking; it is
  // reported but scores stay raw.
  bool rejected = false;

  bool applied() const { return params && !rejected; }
};

// Inputs loaded once and shared by every block and CLI subcommand.
struct RunContext {
  RunConfig config;
  Dataset data;
  ScoreTable tx;  // calibrated transaction scores
  std::optional<CalibrationFit> tx_fit;
  std::optional<CalibrationFit> actor_fit;
  std::vector<ScoreLoadInfo> score_files;

  BootstrapOptions bootstrap() const;
  // Actor scores (calibrated) for the active set at t / the test window / the validation window.
  ScoreTable actor_at(Timestep t);
  ScoreTable actor_static();
  ScoreTable actor_validation();
  ScoreTable load(const std::filesystem::path& p, Level level, Stage stage, const std::string& regime);
};

// Checks that every file the requested blocks will read exists, before any
// computation. Throws ValidationError naming the first missing file.
void validate_inputs(const RunConfig& config, const PipelineBlocks& blocks);

// Loads the dataset (or its cache), the transaction scores, and fits the
// calibrators the requested blocks need.
RunContext prepare(const RunConfig& config, const PipelineBlocks& blocks);

// Transaction scores projected onto `universe` with the given horizon;
// addresses without an incident transaction get score 0. Returns the table
// plus incident counts (0 for the zero-filled).
struct Projection {
  ScoreTable scores;
  std::vector<AddrHandle> universe;
  std::vector<int> counts;  // parallel to universe
  std::size_t zero_filled = 0;
  std::size_t all_zero = 0;
};
Projection project_onto(const RunContext& ctx, std::span<const AddrHandle> universe, Horizon horizon, Operator op,
                        Direction direction);

nlohmann::ordered_json temporal_block(RunContext& ctx);
nlohmann::ordered_json static_block(RunContext& ctx);
nlohmann::ordered_json hybrid_block(RunContext& ctx);
// Static-split Jaccard of the configured scores at the primary budget.
real main_static_jaccard(RunContext& ctx);
nlohmann::ordered_json ablation_block(RunContext& ctx, const std::optional<real>& main_jaccard);
nlohmann::ordered_json calibration_block(const RunContext& ctx);
nlohmann::ordered_json provenance_block(const RunContext& ctx);

// Full evaluation. Byte-deterministic given inputs and config.
nlohmann::ordered_json run_pipeline(const RunConfig& config, const PipelineBlocks& blocks = {});

// Serialized CI: {"point", "ci": {low, high, B, defined_samples, seed_base, level, brackets_point}}.
nlohmann::ordered_json to_json(const BootstrapResult& r);
nlohmann::ordered_json to_json(const Queue& q, const LedgerGraph& graph, bool with_members);

}  // namespace granq
