#pragma once

// Brute-force reference implementations. These deliberately avoid every
// helper used by the main path (no Eigen, no handles, no shared sorting
// code) and follow the textbook definitions literally. Instances above
// kOracleLimit elements are rejected.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace granq::oracle {

inline constexpr std::size_t kOracleLimit = 1000;

double noisy_or(const std::vector<double>& s);
double max_score(const std::vector<double>& s);
double capped_sum(const std::vector<double>& s, double n_cap);
double top_m_mean(const std::vector<double>& s, int m);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// Literal series: every prefix overlap recomputed from scratch.
double rbo(const std::vector<std::string>& l1, const std::vector<std::string>& l2, double p);

// All ids whose score is at least the k-th largest score.
std::set<std::string> top_k(const std::map<std::string, double>& scores, std::size_t k);

struct Burden {
  double illicit_per_100 = 0;
  double licit_per_100 = 0;
  double unknown_per_100 = 0;
  std::optional<double> reviews_per_tp;
  std::optional<double> yield;
};
// classes: 1 illicit, 2 licit, 3 unknown
Burden burden(const std::vector<int>& member_classes, int total_illicit);

std::optional<double> novel_positive_rate(const std::set<std::string>& illicit_now,
                                          const std::vector<std::set<std::string>>& earlier);

// Sorts a copy and interpolates between order statistics (1-based
// h = (n-1)q + 1).
std::pair<double, double> percentile_ci(const std::vector<double>& samples, double level);

// Name-dispatched entry point for the CLI and tests. Inputs per name:
//   noisy_or|max|capped_sum|top_m_mean  {"scores": [...], "n_cap": 1, "m": 5}
//   jaccard                              {"a": [...], "b": [...]}
//   rbo                                  {"l1": [...], "l2": [...], "p": 0.9}
//   novel_positive_rate                  {"now": [...], "earlier": [[...], ...]}
//   percentile_low|percentile_high       {"samples": [...], "level": 95}
//   illicit_per_100                      {"classes": [...], "total_illicit": n}
double metric(std::string_view name, const nlohmann::json& inputs);

}  // namespace granq::oracle
