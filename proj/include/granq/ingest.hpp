#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "granq/ledger.hpp"
#include "granq/scores.hpp"
#include "granq/types.hpp"

namespace granq {

// Input files, already resolved to usable paths. Column layouts:
//   transactions   txId, timestep, f1..fF
//   addr_features  addrId, g1..gF
//   input_edges    addrId, txId
//   output_edges   txId, addrId
//   txtx_edges     txId1, txId2
//   labels         id, class (1 illicit, 2 licit, 3 unknown)
// A header row is recognised when its first record does not parse as data.
struct DataPaths {
  std::filesystem::path transactions;
  std::optional<std::filesystem::path> addr_features;
  std::filesystem::path input_edges;
  std::filesystem::path output_edges;
  std::optional<std::filesystem::path> txtx_edges;
  std::optional<std::filesystem::path> tx_labels;
  std::optional<std::filesystem::path> addr_labels;

  std::vector<std::string> tx_drop_columns;    // by header name
  std::vector<std::string> addr_drop_columns;  // by header name
  // Repeated address rows in addr_features: "error" unless identical, or
  // keep "first" / "last".
  std::string addr_duplicates = "error";
};

struct FileRecord {
  std::string role;
  std::string path;
  std::string sha256;
  std::size_t rows = 0;
};

struct ImputationStat {
  std::string column;
  real median = 0;
  std::size_t train_values = 0;  // non-missing train-split cells behind the median
  std::size_t imputed = 0;
};

struct IngestReport {
  std::size_t tx = 0;
  std::size_t addr = 0;
  std::size_t input_edges = 0;
  std::size_t output_edges = 0;
  std::size_t txtx_edges = 0;
  Timestep min_timestep = 0;
  Timestep max_timestep = 0;
  std::array<std::size_t, 3> tx_labels{};    // illicit, licit, unknown
  std::array<std::size_t, 3> addr_labels{};  // over labeled rows in the file
  std::size_t train_addresses = 0;           // deduplicated per split
  std::size_t validation_addresses = 0;
  std::size_t test_addresses = 0;
  std::vector<ImputationStat> imputation;    // columns with at least one missing cell
  std::vector<FileRecord> files;
};

nlohmann::ordered_json to_json(const IngestReport& r);

struct Dataset {
  LedgerGraph graph;
  LabelTable tx_labels;
  LabelTable addr_labels;
  IngestReport report;
};

// Parses and validates every file. Missing transaction feature cells are
// imputed with the train-split median of their column.
Dataset load_dataset(const DataPaths& paths, const SplitSpec& split);

struct ScoreLoadInfo {
  std::string path;
  std::string sha256;
  std::size_t rows = 0;
  real coverage = 0;  // scored share of the level's nodes
};

// Two-column (id, score) file, optional header. Scores outside [0,1],
// duplicate ids and ids unknown to the graph are errors.
ScoreTable load_scores(const std::filesystem::path& path, const LedgerGraph& graph, Level level, Stage stage,
                       const std::string& regime, ScoreLoadInfo* info = nullptr);
void write_scores(const std::filesystem::path& path, const LedgerGraph& graph, const ScoreTable& table);

// Writes the dataset back in the ingest layout (file names as in a
// synthetic scenario directory).
void write_dataset_csv(const Dataset& data, const std::filesystem::path& dir);

// Binary cache of a loaded dataset.
void save_cache(const Dataset& data, const std::filesystem::path& path);
Dataset load_cache(const std::filesystem::path& path);

}  // namespace granq
