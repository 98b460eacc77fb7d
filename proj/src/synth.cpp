#include "granq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "granq/csv.hpp"
#include "granq/error.hpp"
#include "granq/rng.hpp"

namespace granq {

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::tx_dominant: return "tx_dominant";
    case Regime::actor_dominant: return "actor_dominant";
    case Regime::dead: return "dead";
  }
  return "?";
}

Regime parse_regime(std::string_view s) {
  if (s == "tx_dominant") return Regime::tx_dominant;
  if (s == "actor_dominant") return Regime::actor_dominant;
  if (s == "dead") return Regime::dead;
  throw ValidationError("unknown regime '" + std::string(s) + "'");
}

void ScenarioSpec::validate() const {
  if (n_timesteps < 1 || addrs_per_timestep < 1 || txs_per_timestep < 1) {
    throw ValidationError("scenario sizes must be positive");
  }
  if (illicit_prevalence.empty() || regime_schedule.empty()) {
    throw ValidationError("scenario needs a prevalence and a regime schedule");
  }
  for (real p : illicit_prevalence) {
    if (!(p >= 0 && p <= 1)) throw ValidationError("prevalence must lie in [0,1]");
  }
  if (!(carry_over >= 0 && carry_over < 1)) throw ValidationError("carry_over must lie in [0,1)");
  if (!(unknown_fraction >= 0 && unknown_fraction <= 1)) throw ValidationError("unknown_fraction must lie in [0,1]");
  if (!(missing_fraction >= 0 && missing_fraction < 1)) throw ValidationError("missing_fraction must lie in [0,1)");
  if (tx_features < 1) throw ValidationError("scenario needs at least one tx feature");
  if (degree.k_min < 1 || degree.k_max < degree.k_min) {
    throw ValidationError("infeasible degree spec: need 1 <= k_min <= k_max");
  }
  if (degree.k_max > addrs_per_timestep) {
    throw ValidationError("infeasible degree spec: k_max exceeds addresses per timestep");
  }
  if (degree.kind == DegreeDistribution::Kind::zipf && !(degree.s > 0)) {
    throw ValidationError("infeasible degree spec: zipf exponent must be positive");
  }
}

real ScenarioSpec::prevalence_at(Timestep t) const {
  return illicit_prevalence[static_cast<std::size_t>(t - 1) % illicit_prevalence.size()];
}

Regime ScenarioSpec::regime_at(Timestep t) const {
  return regime_schedule[static_cast<std::size_t>(t - 1) % regime_schedule.size()];
}

SplitSpec ScenarioSpec::default_split() const {
  if (n_timesteps >= 49) return SplitSpec{};
  if (n_timesteps < 3) throw ValidationError("a scenario needs at least 3 timesteps for a split");
  const int test = std::max(1, static_cast<int>(std::lround(n_timesteps * 10.0 / 49.0)));
  const int val = std::max(1, static_cast<int>(std::lround(n_timesteps * 5.0 / 49.0)));
  const int train = n_timesteps - test - val;
  if (train < 1) return SplitSpec{{1, 1}, {2, 2}, {3, n_timesteps}};
  return SplitSpec{{1, train}, {train + 1, train + val}, {train + val + 1, n_timesteps}};
}

ScenarioSpec ScenarioSpec::from_json(const nlohmann::json& root) {
  const nlohmann::json& j = root.contains("scenario") ? root.at("scenario") : root;
  ScenarioSpec s;
  s.n_timesteps = j.value("n_timesteps", s.n_timesteps);
  s.addrs_per_timestep = j.value("addrs_per_timestep", s.addrs_per_timestep);
  s.txs_per_timestep = j.value("txs_per_timestep", s.txs_per_timestep);
  if (j.contains("illicit_prevalence")) {
    const auto& p = j.at("illicit_prevalence");
    s.illicit_prevalence = p.is_array() ? p.get<std::vector<real>>() : std::vector<real>{p.get<real>()};
  }
  if (j.contains("regime_schedule")) {
    const auto& r = j.at("regime_schedule");
    s.regime_schedule.clear();
    if (r.is_array()) {
      for (const auto& x : r) s.regime_schedule.push_back(parse_regime(x.get<std::string>()));
    } else {
      s.regime_schedule.push_back(parse_regime(r.get<std::string>()));
    }
  }
  if (j.contains("degree")) {
    const auto& d = j.at("degree");
    const auto kind = d.value("kind", std::string("uniform"));
    if (kind == "uniform") s.degree.kind = DegreeDistribution::Kind::uniform;
    else if (kind == "zipf") s.degree.kind = DegreeDistribution::Kind::zipf;
    else throw ValidationError("unknown degree distribution '" + kind + "'");
    s.degree.k_min = d.value("k_min", s.degree.k_min);
    s.degree.k_max = d.value("k_max", s.degree.k_max);
    s.degree.s = d.value("s", s.degree.s);
  }
  s.seed = j.value("seed", s.seed);
  s.carry_over = j.value("carry_over", s.carry_over);
  s.signal = j.value("signal", s.signal);
  s.offset = j.value("offset", s.offset);
  s.unknown_fraction = j.value("unknown_fraction", s.unknown_fraction);
  s.missing_fraction = j.value("missing_fraction", s.missing_fraction);
  s.tx_features = j.value("tx_features", s.tx_features);
  if (j.contains("extra_regimes")) s.extra_regimes = j.at("extra_regimes").get<std::vector<std::string>>();
  s.validate();
  return s;
}

nlohmann::json ScenarioSpec::to_json() const {
  nlohmann::ordered_json j;
  j["n_timesteps"] = n_timesteps;
  j["addrs_per_timestep"] = addrs_per_timestep;
  j["txs_per_timestep"] = txs_per_timestep;
  j["illicit_prevalence"] = illicit_prevalence;
  std::vector<std::string> regimes;
  for (auto r : regime_schedule) regimes.emplace_back(to_string(r));
  j["regime_schedule"] = regimes;
  j["degree"] = {{"kind", degree.kind == DegreeDistribution::Kind::uniform ? "uniform" : "zipf"},
                 {"k_min", degree.k_min},
                 {"k_max", degree.k_max},
                 {"s", degree.s}};
  j["seed"] = seed;
  j["carry_over"] = carry_over;
  j["signal"] = signal;
  j["offset"] = offset;
  j["unknown_fraction"] = unknown_fraction;
  j["missing_fraction"] = missing_fraction;
  j["tx_features"] = tx_features;
  j["extra_regimes"] = extra_regimes;
  return j;
}

namespace {

real logistic(real x) { return 1.0 / (1.0 + std::exp(-x)); }

class DegreeSampler {
 public:
  explicit DegreeSampler(const DegreeDistribution& d) : d_(d) {
    if (d.kind == DegreeDistribution::Kind::zipf) {
      real total = 0;
      for (int k = d.k_min; k <= d.k_max; ++k) {
        total += std::pow(static_cast<real>(k), -d.s);
        cdf_.push_back(total);
      }
      for (auto& c : cdf_) c /= total;
    }
  }

  int operator()(SplitMix64& rng) const {
    if (d_.kind == DegreeDistribution::Kind::uniform) {
      return d_.k_min + static_cast<int>(rng.index(static_cast<std::uint64_t>(d_.k_max - d_.k_min + 1)));
    }
    const real u = rng.uniform();
    auto it = std::ranges::upper_bound(cdf_, u);
    if (it == cdf_.end()) --it;
    return d_.k_min + static_cast<int>(it - cdf_.begin());
  }

 private:
  DegreeDistribution d_;
  std::vector<real> cdf_;
};

// First `k` entries of `v` become a uniform sample without replacement.
template <typename T>
void partial_shuffle(std::vector<T>& v, std::size_t k, SplitMix64& rng) {
  for (std::size_t i = 0; i < k && i < v.size(); ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(v.size() - i));
    std::swap(v[i], v[j]);
  }
}

Label observe(bool illicit, real unknown_fraction, SplitMix64& rng) {
  if (rng.uniform() < unknown_fraction) return Label::unknown;
  return illicit ? Label::illicit : Label::licit;
}

}  // namespace

SyntheticLedger generate(const ScenarioSpec& spec) {
  spec.validate();
  SplitMix64 rng(spec.seed);
  const DegreeSampler degree(spec.degree);

  LedgerGraph::Builder b;
  std::vector<bool> addr_truth;  // by handle
  std::vector<bool> tx_truth;
  std::vector<std::vector<real>> tx_feat;
  std::vector<AddrHandle> prev;

  for (Timestep t = 1; t <= spec.n_timesteps; ++t) {
    const auto n_addr = static_cast<std::size_t>(spec.addrs_per_timestep);
    std::size_t n_carry = std::min(prev.size(), static_cast<std::size_t>(std::lround(spec.carry_over * n_addr)));
    partial_shuffle(prev, n_carry, rng);
    std::vector<AddrHandle> pool(prev.begin(), prev.begin() + static_cast<std::ptrdiff_t>(n_carry));
    const real prevalence = spec.prevalence_at(t);
    for (std::size_t i = pool.size(); i < n_addr; ++i) {
      pool.push_back(b.add_addr("a" + std::to_string(t) + "_" + std::to_string(i)));
      addr_truth.push_back(rng.bernoulli(prevalence));
    }

    std::vector<TxHandle> step_txs;
    std::vector<AddrHandle> scratch = pool;
    for (int j = 0; j < spec.txs_per_timestep; ++j) {
      const TxHandle tx = b.add_tx("t" + std::to_string(t) + "_" + std::to_string(j), t);
      const auto d = static_cast<std::size_t>(degree(rng));
      partial_shuffle(scratch, d, rng);
      bool illicit = false;
      for (std::size_t k = 0; k < d; ++k) {
        const AddrHandle a = scratch[k];
        illicit = illicit || addr_truth[a.index()];
        const real side = rng.uniform();
        if (side < 0.45 || side >= 0.9) b.add_input_edge(a, tx);
        if (side >= 0.45) b.add_output_edge(tx, a);
      }
      tx_truth.push_back(illicit);

      std::vector<real> f(static_cast<std::size_t>(spec.tx_features));
      f[0] = std::exp(rng.normal());
      for (std::size_t c = 1; c < f.size(); ++c) f[c] = rng.normal() + (c == 1 && illicit ? 0.5 : 0.0);
      tx_feat.push_back(std::move(f));

      if (!step_txs.empty() && rng.bernoulli(0.5)) {
        b.add_txtx_edge(step_txs[static_cast<std::size_t>(rng.index(step_txs.size()))], tx);
      }
      step_txs.push_back(tx);
    }
    prev = std::move(pool);
  }

  MatrixXr tf(static_cast<Eigen::Index>(tx_feat.size()), spec.tx_features);
  for (std::size_t i = 0; i < tx_feat.size(); ++i) {
    for (int c = 0; c < spec.tx_features; ++c) tf(static_cast<Eigen::Index>(i), c) = tx_feat[i][static_cast<std::size_t>(c)];
  }
  std::vector<std::string> tf_names;
  for (int c = 1; c <= spec.tx_features; ++c) tf_names.push_back("f" + std::to_string(c));
  b.set_tx_features(std::move(tf), std::move(tf_names));

  MatrixXr af(static_cast<Eigen::Index>(addr_truth.size()), 2);
  for (std::size_t i = 0; i < addr_truth.size(); ++i) {
    af(static_cast<Eigen::Index>(i), 0) = rng.normal() + (addr_truth[i] ? 0.3 : 0.0);
    af(static_cast<Eigen::Index>(i), 1) = rng.normal();
  }
  b.set_addr_features(std::move(af), {"g1", "g2"});

  SyntheticLedger out;
  out.graph = std::move(b).build();
  out.split = spec.default_split();
  const auto& g = out.graph;

  // Labels and scores come from their own streams so that changing the
  // scorer never perturbs the topology.
  SplitMix64 label_rng(spec.seed ^ 0x6c6162656c73ULL);
  out.addr_labels = LabelTable(g.addr_count());
  for (std::size_t i = 0; i < g.addr_count(); ++i) {
    out.addr_labels.set(i, observe(addr_truth[i], spec.unknown_fraction, label_rng));
  }
  out.tx_labels = LabelTable(g.tx_count());
  for (std::size_t i = 0; i < g.tx_count(); ++i) {
    out.tx_labels.set(i, observe(tx_truth[i], spec.unknown_fraction, label_rng));
  }

  SplitMix64 score_rng(spec.seed ^ 0x73636f726573ULL);
  out.tx_scores = ScoreTable::empty(Level::transaction, Stage::raw, "main", g.tx_count());
  for (std::size_t i = 0; i < g.tx_count(); ++i) {
    const bool informative = spec.regime_at(g.timestep(TxHandle(i))) == Regime::tx_dominant;
    const real y = informative && tx_truth[i] ? spec.signal : 0.0;
    out.tx_scores.set(i, logistic(y + score_rng.normal() - spec.offset));
  }
  for (Timestep t = 1; t <= spec.n_timesteps; ++t) {
    auto table = ScoreTable::empty(Level::actor, Stage::raw, "main", g.addr_count());
    const bool informative = spec.regime_at(t) == Regime::actor_dominant;
    for (AddrHandle a : active_set(g, t).members) {
      const real y = informative && addr_truth[a.index()] ? spec.signal : 0.0;
      table.set(a.index(), logistic(y + score_rng.normal() - spec.offset));
    }
    out.actor_scores.emplace(t, std::move(table));
  }
  return out;
}

ScoreTable window_actor_scores(const SyntheticLedger& s, TimeRange window) {
  const auto& g = s.graph;
  auto table = ScoreTable::empty(Level::actor, Stage::raw, "main", g.addr_count());
  for (std::size_t i = 0; i < g.addr_count(); ++i) {
    Timestep latest = 0;
    for (const auto& inc : g.incidences(AddrHandle(i))) {
      if (window.contains(inc.timestep)) latest = std::max(latest, inc.timestep);
    }
    if (latest > 0) table.set(i, s.actor_scores.at(latest)[i]);
  }
  return table;
}

namespace {

void write_scores(const std::filesystem::path& path, const ScoreTable& table, auto&& id_of) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "id,score\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table.has(i)) out << id_of(i) << ',' << csv::format_double(table[i]) << '\n';
  }
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::string range_toml(TimeRange r) { return "[" + std::to_string(r.lo) + ", " + std::to_string(r.hi) + "]"; }

}  // namespace

void write_scenario(const SyntheticLedger& s, const ScenarioSpec& spec, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "scores");
  const auto& g = s.graph;
  auto tx_id = [&](std::size_t i) -> const std::string& { return g.tx_id(TxHandle(i)); };
  auto addr_id = [&](std::size_t i) -> const std::string& { return g.addr_id(AddrHandle(i)); };

  {
    SplitMix64 hole(spec.seed ^ 0x686f6c6573ULL);
    auto out = open_out(dir / "transactions.csv");
    out << "txId,timestep";
    for (const auto& n : g.tx_feature_names()) out << ',' << n;
    out << '\n';
    const auto& f = g.tx_features();
    for (std::size_t i = 0; i < g.tx_count(); ++i) {
      out << tx_id(i) << ',' << g.timestep(TxHandle(i));
      for (Eigen::Index c = 0; c < f.cols(); ++c) {
        out << ',';
        if (spec.missing_fraction > 0 && c > 0 && hole.bernoulli(spec.missing_fraction)) continue;
        out << csv::format_double(f(static_cast<Eigen::Index>(i), c));
      }
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "addr_features.csv");
    out << "addrId";
    for (const auto& n : g.addr_feature_names()) out << ',' << n;
    out << '\n';
    const auto& f = g.addr_features();
    for (std::size_t i = 0; i < g.addr_count(); ++i) {
      out << addr_id(i);
      for (Eigen::Index c = 0; c < f.cols(); ++c) out << ',' << csv::format_double(f(static_cast<Eigen::Index>(i), c));
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / "input_edges.csv");
    out << "addrId,txId\n";
    for (auto [a, t] : g.input_edges()) out << g.addr_id(a) << ',' << g.tx_id(t) << '\n';
  }
  {
    auto out = open_out(dir / "output_edges.csv");
    out << "txId,addrId\n";
    for (auto [t, a] : g.output_edges()) out << g.tx_id(t) << ',' << g.addr_id(a) << '\n';
  }
  {
    auto out = open_out(dir / "txtx_edges.csv");
    out << "txId1,txId2\n";
    for (auto [x, y] : g.txtx_edges()) out << g.tx_id(x) << ',' << g.tx_id(y) << '\n';
  }
  {
    auto out = open_out(dir / "tx_labels.csv");
    out << "txId,class\n";
    for (std::size_t i = 0; i < g.tx_count(); ++i) out << tx_id(i) << ',' << static_cast<int>(s.tx_labels[i]) << '\n';
  }
  {
    auto out = open_out(dir / "addr_labels.csv");
    out << "addrId,class\n";
    for (std::size_t i = 0; i < g.addr_count(); ++i) {
      out << addr_id(i) << ',' << static_cast<int>(s.addr_labels[i]) << '\n';
    }
  }

  write_scores(dir / "scores" / "tx.csv", s.tx_scores, tx_id);
  for (const auto& [t, table] : s.actor_scores) {
    write_scores(dir / "scores" / ("actor_t" + std::to_string(t) + ".csv"), table, addr_id);
  }
  write_scores(dir / "scores" / "actor_validation.csv", window_actor_scores(s, s.split.validation), addr_id);
  const ScoreTable actor_static = window_actor_scores(s, s.split.test);
  write_scores(dir / "scores" / "actor_static.csv", actor_static, addr_id);

  // Ablation variants: same informativeness schedule, independent noise.
  for (std::size_t r = 0; r < spec.extra_regimes.size(); ++r) {
    const auto& name = spec.extra_regimes[r];
    SplitMix64 rng(spec.seed + 0x9e3779b9ULL * (r + 1));
    auto tx = s.tx_scores;
    tx.regime = name;
    for (std::size_t i = 0; i < tx.size(); ++i) {
      const bool informative = spec.regime_at(g.timestep(TxHandle(i))) == Regime::tx_dominant;
      const bool ill = s.tx_labels[i] == Label::illicit;
      tx.set(i, logistic((informative && ill ? spec.signal : 0.0) + rng.normal() - spec.offset));
    }
    auto actor = actor_static;
    actor.regime = name;
    for (std::size_t i = 0; i < actor.size(); ++i) {
      if (!actor.has(i)) continue;
      const bool ill = s.addr_labels[i] == Label::illicit;
      actor.set(i, logistic((ill ? 0.5 * spec.signal : 0.0) + rng.normal() - spec.offset));
    }
    write_scores(dir / "scores" / (name + "_tx.csv"), tx, tx_id);
    write_scores(dir / "scores" / (name + "_actor_static.csv"), actor, addr_id);
  }

  {
    auto out = open_out(dir / "scenario.json");
    out << nlohmann::ordered_json(spec.to_json()).dump(2) << '\n';
  }
  auto out = open_out(dir / "run.toml");
  out << "# synthetic scenario, seed " << spec.seed << "\n\n"
      << "[data]\n"
      << "transactions = \"transactions.csv\"\n"
      << "addr_features = \"addr_features.csv\"\n"
      << "input_edges = \"input_edges.csv\"\n"
      << "output_edges = \"output_edges.csv\"\n"
      << "txtx_edges = \"txtx_edges.csv\"\n"
      << "tx_labels = \"tx_labels.csv\"\n"
      << "addr_labels = \"addr_labels.csv\"\n"
      << "value_column = \"f1\"\n\n"
      << "[split]\n"
      << "train = " << range_toml(s.split.train) << '\n'
      << "validation = " << range_toml(s.split.validation) << '\n'
      << "test = " << range_toml(s.split.test) << "\n\n"
      << "[scores]\n"
      << "tx = \"scores/tx.csv\"\n"
      << "actor_temporal = \"scores/actor_t{t}.csv\"\n"
      << "actor_static = \"scores/actor_static.csv\"\n"
      << "actor_validation = \"scores/actor_validation.csv\"\n";
  for (const auto& name : spec.extra_regimes) {
    out << "\n[[ablation.regimes]]\n"
        << "name = \"" << name << "\"\n"
        << "tx = \"scores/" << name << "_tx.csv\"\n"
        << "actor = \"scores/" << name << "_actor_static.csv\"\n";
  }
}

}  // namespace granq
