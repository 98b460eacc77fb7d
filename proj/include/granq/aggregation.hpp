#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "granq/ledger.hpp"
#include "granq/scores.hpp"
#include "granq/types.hpp"

namespace granq {

enum class Operator { noisy_or, max_score, capped_sum, top_m_mean };

std::string_view to_string(Operator op);
Operator parse_operator(std::string_view s);
inline constexpr Operator kAllOperators[] = {Operator::noisy_or, Operator::max_score, Operator::capped_sum,
                                             Operator::top_m_mean};

// ---------------------------------------------------------------------------
// Operator kernels over a dense score vector. Inputs are assumed in [0,1].

// 1 - prod(1 - s_i), evaluated as -expm1(sum log1p(-s_i)). Exactly 1 when any
// score is 1; the result is clamped into [max(s), 1] so rounding can never
// break the max-dominance bound.
template <typename Derived>
typename Derived::Scalar noisy_or(const Eigen::DenseBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  if (s.size() == 0) return Scalar(0);
  if (s.size() == 1) return s(0);
  Scalar log_miss(0);
  Scalar hi(0);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const Scalar v = s(i);
    if (v >= Scalar(1)) return Scalar(1);
    log_miss += std::log1p(-v);
    hi = std::max(hi, v);
  }
  return std::clamp(-std::expm1(log_miss), hi, Scalar(1));
}

template <typename Derived>
typename Derived::Scalar max_score(const Eigen::DenseBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  return s.size() == 0 ? Scalar(0) : s.maxCoeff();
}

// min(1, sum(s) / n_cap)
template <typename Derived>
typename Derived::Scalar capped_sum(const Eigen::DenseBase<Derived>& s, typename Derived::Scalar n_cap) {
  using Scalar = typename Derived::Scalar;
  return std::min(Scalar(1), s.sum() / n_cap);
}

// Mean of the m largest scores, or of all of them when fewer than m exist.
template <typename Derived>
typename Derived::Scalar top_m_mean(const Eigen::DenseBase<Derived>& s, int m) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = s.size();
  if (n == 0) return Scalar(0);
  if (n == 1) return s(0);
  const Eigen::Index take = std::min<Eigen::Index>(n, m);
  VectorX<Scalar> v = s;
  std::nth_element(v.data(), v.data() + (take - 1), v.data() + n, std::greater<Scalar>());
  Scalar sum(0);
  for (Eigen::Index i = 0; i < take; ++i) sum += v(i);
  return std::min(sum / Scalar(take), v.head(take).maxCoeff());
}

struct ProjectionSpec {
  Operator op = Operator::noisy_or;
  Direction direction = Direction::both;
  Horizon horizon = Horizon::exact(1);
  real n_cap = 1.0;
  int m = 5;

  void validate() const;
};

template <typename Derived>
typename Derived::Scalar apply_operator(const Eigen::DenseBase<Derived>& s, const ProjectionSpec& spec) {
  switch (spec.op) {
    case Operator::noisy_or: return noisy_or(s);
    case Operator::max_score: return max_score(s);
    case Operator::capped_sum: return capped_sum(s, static_cast<typename Derived::Scalar>(spec.n_cap));
    case Operator::top_m_mean: return top_m_mean(s, spec.m);
  }
  return 0;
}

struct ProjectionResult {
  ScoreTable scores;                      // level = actor, NaN outside the projected set
  std::vector<AddrHandle> projected;      // addresses that received a score, ascending
  std::vector<AddrHandle> excluded;       // universe members with no incident tx in the horizon
  std::vector<int> incident_counts;       // per projected address, parallel to `projected`
  std::size_t all_zero = 0;               // projected addresses whose incident scores are all 0
};

// Projects transaction scores to address scores over `universe`. Addresses
// without an incident transaction in horizon and direction are excluded and
// reported. Throws when the universe is empty or an incident transaction has
// no score.
ProjectionResult project_scores(const LedgerGraph& graph, const ScoreTable& tx_scores, const ProjectionSpec& spec,
                                std::span<const AddrHandle> universe);

// ---------------------------------------------------------------------------
// Causal address features

struct PathAFeatureTable {
  Timestep horizon = 0;
  std::vector<AddrHandle> addrs;
  MatrixXr rows;  // width F_tx + 2: feature mean, incident count, recency
  std::vector<std::string> column_names;
};

// Mean-pools transaction features over incidents with timestamp <= t (both
// edge directions), then appends incident count and recency t - latest
// incident timestep. Addresses with no such incident produce no row.
PathAFeatureTable path_a_features(const LedgerGraph& graph, std::span<const AddrHandle> universe, Timestep t);

void write_feature_csv(const LedgerGraph& graph, const PathAFeatureTable& table, const std::filesystem::path& out);

// Four-column low-information features, identical definitions at both
// levels: (degree, total value, mean value, mean timestep). Neighbourhoods are
// incident transactions for addresses and unique 1-hop transaction
// neighbours for transactions, restricted to the horizon. Empty
// neighbourhoods give a zero row. `value_column` indexes tx_features.
MatrixXr low_info_features(const LedgerGraph& graph, Level level, Horizon horizon, std::optional<int> value_column);

// Incident transaction count (both directions) inside the scope.
std::vector<int> activity_count(const LedgerGraph& graph, std::span<const AddrHandle> universe, Horizon scope);

// Median incident count over addresses active in the window (used to audit n_cap).
real median_incident_count(const LedgerGraph& graph, TimeRange window);

}  // namespace granq
