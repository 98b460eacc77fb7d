#include "granq/aggregation.hpp"

#include <fstream>
#include <string>

#include "granq/csv.hpp"
#include "granq/error.hpp"

namespace granq {

std::string_view to_string(Operator op) {
  switch (op) {
    case Operator::noisy_or: return "noisy_or";
    case Operator::max_score: return "max_score";
    case Operator::capped_sum: return "capped_sum";
    case Operator::top_m_mean: return "top_m_mean";
  }
  return "noisy_or";
}

Operator parse_operator(std::string_view s) {
  for (Operator op : kAllOperators) {
    if (to_string(op) == s) return op;
  }
  if (s == "max") return Operator::max_score;
  if (s == "top_m") return Operator::top_m_mean;
  throw ValidationError("unknown projection operator '" + std::string(s) + "'");
}

void ProjectionSpec::validate() const {
  if (!(n_cap > 0)) throw ValidationError("n_cap must be > 0");
  if (m < 1) throw ValidationError("top-m requires m >= 1");
}

ProjectionResult project_scores(const LedgerGraph& graph, const ScoreTable& tx_scores, const ProjectionSpec& spec,
                                std::span<const AddrHandle> universe) {
  spec.validate();
  if (universe.empty()) throw ValidationError("projection universe is empty");
  if (tx_scores.level != Level::transaction) throw ValidationError("projection expects transaction-level scores");
  if (tx_scores.size() != graph.tx_count()) throw ValidationError("transaction score table does not match graph");

  ProjectionResult out;
  out.scores = ScoreTable::empty(Level::actor, tx_scores.stage, tx_scores.regime, graph.addr_count());

  std::vector<AddrHandle> sorted(universe.begin(), universe.end());
  std::ranges::sort(sorted);
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  VectorXr buffer;
  std::vector<std::string> missing;
  for (AddrHandle a : sorted) {
    if (a.index() >= graph.addr_count()) throw ValidationError("universe contains unknown address handle");
    auto incs = graph.incidences(a);
    Eigen::Index n = 0;
    buffer.resize(static_cast<Eigen::Index>(incs.size()));
    for (const Incidence& inc : incs) {
      if (!spec.horizon.contains(inc.timestep) || !inc.matches(spec.direction)) continue;
      if (!tx_scores.has(inc.tx.index())) {
        if (missing.size() < 10) missing.push_back(graph.tx_id(inc.tx));
        continue;
      }
      buffer[n++] = tx_scores[inc.tx.index()];
    }
    if (n == 0) {
      out.excluded.push_back(a);
      continue;
    }
    auto s = buffer.head(n);
    out.scores.set(a.index(), apply_operator(s, spec));
    out.projected.push_back(a);
    out.incident_counts.push_back(static_cast<int>(n));
    if ((s.array() == 0.0).all()) ++out.all_zero;
  }
  if (!missing.empty()) {
    std::string msg = "transaction scores missing for incident transactions:";
    for (const auto& id : missing) msg += " " + id;
    throw ValidationError(msg);
  }
  return out;
}

PathAFeatureTable path_a_features(const LedgerGraph& graph, std::span<const AddrHandle> universe, Timestep t) {
  if (!graph.has_tx_features()) throw ValidationError("Path A features require transaction features");
  const MatrixXr& x = graph.tx_features();
  const Eigen::Index width = x.cols();

  PathAFeatureTable table;
  table.horizon = t;
  table.column_names = graph.tx_feature_names();
  table.column_names.emplace_back("incident_count");
  table.column_names.emplace_back("recency");

  std::vector<AddrHandle> sorted(universe.begin(), universe.end());
  std::ranges::sort(sorted);
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<VectorXr> rows;
  VectorXr sum(width);
  for (AddrHandle a : sorted) {
    sum.setZero();
    int count = 0;
    Timestep latest = 0;
    for (const Incidence& inc : graph.incidences(a)) {
      if (inc.timestep > t) break;  // incidences are sorted by timestep
      sum += x.row(static_cast<Eigen::Index>(inc.tx.index())).transpose();
      ++count;
      latest = std::max(latest, inc.timestep);
    }
    if (count == 0) continue;
    VectorXr row(width + 2);
    row.head(width) = sum / static_cast<real>(count);
    row[width] = count;
    row[width + 1] = t - latest;
    table.addrs.push_back(a);
    rows.push_back(std::move(row));
  }
  table.rows.resize(static_cast<Eigen::Index>(rows.size()), width + 2);
  for (std::size_t i = 0; i < rows.size(); ++i) table.rows.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return table;
}

void write_feature_csv(const LedgerGraph& graph, const PathAFeatureTable& table, const std::filesystem::path& out) {
  std::ofstream os(out, std::ios::binary);
  if (!os) throw Error("cannot write '" + out.string() + "'");
  os << "addrId";
  for (const auto& name : table.column_names) os << ',' << name;
  os << '\n';
  for (std::size_t i = 0; i < table.addrs.size(); ++i) {
    os << graph.addr_id(table.addrs[i]);
    for (Eigen::Index j = 0; j < table.rows.cols(); ++j) {
      os << ',' << csv::format_double(table.rows(static_cast<Eigen::Index>(i), j));
    }
    os << '\n';
  }
}

MatrixXr low_info_features(const LedgerGraph& graph, Level level, Horizon horizon, std::optional<int> value_column) {
  if (!value_column) throw ValidationError("low-info features need a configured value column");
  if (!graph.has_tx_features()) throw ValidationError("low-info features need transaction feature values");
  const MatrixXr& x = graph.tx_features();
  if (*value_column < 0 || *value_column >= x.cols()) throw ValidationError("value column out of range");
  auto value = [&](TxHandle h) { return x(static_cast<Eigen::Index>(h.index()), *value_column); };

  auto fill = [&](auto&& neighbours, MatrixXr& out, Eigen::Index row) {
    real degree = 0, total = 0, tsum = 0;
    for (TxHandle h : neighbours) {
      if (!horizon.contains(graph.timestep(h))) continue;
      degree += 1;
      total += value(h);
      tsum += graph.timestep(h);
    }
    if (degree == 0) {
      out.row(row).setZero();
    } else {
      out.row(row) << degree, total, total / degree, tsum / degree;
    }
  };

  if (level == Level::actor) {
    MatrixXr out(static_cast<Eigen::Index>(graph.addr_count()), 4);
    std::vector<TxHandle> txs;
    for (std::size_t i = 0; i < graph.addr_count(); ++i) {
      txs.clear();
      for (const Incidence& inc : graph.incidences(AddrHandle{i})) txs.push_back(inc.tx);
      fill(txs, out, static_cast<Eigen::Index>(i));
    }
    return out;
  }
  MatrixXr out(static_cast<Eigen::Index>(graph.tx_count()), 4);
  for (std::size_t i = 0; i < graph.tx_count(); ++i) fill(graph.tx_neighbors(TxHandle{i}), out, static_cast<Eigen::Index>(i));
  return out;
}

std::vector<int> activity_count(const LedgerGraph& graph, std::span<const AddrHandle> universe, Horizon scope) {
  std::vector<int> out;
  out.reserve(universe.size());
  for (AddrHandle a : universe) {
    if (a.index() >= graph.addr_count()) throw ValidationError("activity scope references unknown address");
    int n = 0;
    for (const Incidence& inc : graph.incidences(a)) n += scope.contains(inc.timestep);
    out.push_back(n);
  }
  return out;
}

real median_incident_count(const LedgerGraph& graph, TimeRange window) {
  auto addrs = split_addresses(graph, window);
  if (addrs.empty()) return 0;
  auto counts = activity_count(graph, addrs, Horizon::window(window));
  auto mid = counts.begin() + static_cast<std::ptrdiff_t>(counts.size() / 2);
  std::nth_element(counts.begin(), mid, counts.end());
  if (counts.size() % 2 == 1) return *mid;
  int upper = *mid;
  int lower = *std::max_element(counts.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace granq
