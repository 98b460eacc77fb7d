#include "granq/config.hpp"

#include <cstdlib>

#include "granq/error.hpp"
#include "granq/toml_lite.hpp"

namespace granq {

namespace fs = std::filesystem;

fs::path resolve_path(const fs::path& base_dir, const fs::path& p) {
  if (p.is_absolute()) return p;
  fs::path first = base_dir / p;
  if (fs::exists(first)) return first.lexically_normal();
  if (const char* root = std::getenv("GRANQ_DATA_DIR"); root && *root) {
    fs::path second = fs::path(root) / p;
    if (fs::exists(second)) return second.lexically_normal();
  }
  return first.lexically_normal();
}

fs::path ScoreFiles::actor_at(Timestep t) const {
  if (!actor_temporal) throw ValidationError("no temporal actor score template configured");
  std::string s = *actor_temporal;
  const auto pos = s.find("{t}");
  if (pos == std::string::npos) throw ValidationError("actor_temporal template lacks '{t}'");
  s.replace(pos, 3, std::to_string(t));
  return s;
}

void RunConfig::validate() const {
  split.validate();
  if (budget_fractions.empty()) throw ValidationError("budget_fractions is empty");
  for (real b : budget_fractions) {
    if (!(b > 0 && b < 1)) throw ValidationError("budget fractions must lie in (0,1)");
  }
  if (!(rbo_persistence > 0 && rbo_persistence < 1)) throw ValidationError("rbo_persistence must lie in (0,1)");
  if (!(n_cap > 0)) throw ValidationError("n_cap must be positive");
  if (top_m < 1) throw ValidationError("top_m must be >= 1");
  if (bootstrap_resamples < 2) throw ValidationError("bootstrap_resamples must be >= 2");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  if (!(ci_level > 0 && ci_level < 100)) throw ValidationError("ci_level must lie in (0,100)");
  if (hybrid_alpha_grid.empty() || hybrid_delta_grid.empty()) throw ValidationError("hybrid grids must be non-empty");
  for (real a : hybrid_alpha_grid) HybridParams{a, 0}.validate();
  for (real d : hybrid_delta_grid) HybridParams{1, d}.validate();
  hybrid_params.validate();
}

namespace {

TimeRange parse_range(const nlohmann::json& j, const char* name) {
  if (!j.is_array() || j.size() != 2) throw ValidationError(std::string("split.") + name + " must be [lo, hi]");
  return {j[0].get<Timestep>(), j[1].get<Timestep>()};
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  RunConfig c;
  c.base_dir = base_dir;
  try {
    auto path = [&](const nlohmann::json& sec, const char* key) -> std::optional<fs::path> {
      if (!sec.contains(key)) return std::nullopt;
      return resolve_path(base_dir, sec.at(key).get<std::string>());
    };
    auto required = [&](const nlohmann::json& sec, const char* key) {
      auto p = path(sec, key);
      if (!p) throw ValidationError(std::string("data.") + key + " is required");
      return *p;
    };

    const auto data = j.value("data", nlohmann::json::object());
    if (!data.empty()) {
      c.data.transactions = required(data, "transactions");
      c.data.input_edges = required(data, "input_edges");
      c.data.output_edges = required(data, "output_edges");
      c.data.addr_features = path(data, "addr_features");
      c.data.txtx_edges = path(data, "txtx_edges");
      c.data.tx_labels = path(data, "tx_labels");
      c.data.addr_labels = path(data, "addr_labels");
      take(data, "tx_drop_columns", c.data.tx_drop_columns);
      take(data, "addr_drop_columns", c.data.addr_drop_columns);
      take(data, "addr_duplicates", c.data.addr_duplicates);
      if (data.contains("value_column")) c.value_column = data.at("value_column").get<std::string>();
      c.cache = path(data, "cache");
    }

    if (j.contains("split")) {
      const auto& s = j.at("split");
      if (s.contains("train")) c.split.train = parse_range(s.at("train"), "train");
      if (s.contains("validation")) c.split.validation = parse_range(s.at("validation"), "validation");
      if (s.contains("test")) c.split.test = parse_range(s.at("test"), "test");
    }

    const auto ev = j.value("eval", nlohmann::json::object());
    take(ev, "budget_fractions", c.budget_fractions);
    if (ev.contains("primary_operator")) c.primary_operator = parse_operator(ev.at("primary_operator").get<std::string>());
    if (ev.contains("direction")) c.direction = parse_direction(ev.at("direction").get<std::string>());
    take(ev, "rbo_persistence", c.rbo_persistence);
    take(ev, "n_cap", c.n_cap);
    take(ev, "top_m", c.top_m);
    take(ev, "strata", c.strata);
    take(ev, "brier_gate", c.brier_gate);
    if (ev.contains("operators")) {
      c.operator_sweep.clear();
      for (const auto& o : ev.at("operators")) c.operator_sweep.push_back(parse_operator(o.get<std::string>()));
    }
    if (ev.contains("directions")) {
      c.direction_sweep.clear();
      for (const auto& d : ev.at("directions")) c.direction_sweep.push_back(parse_direction(d.get<std::string>()));
    }

    const auto bs = j.value("bootstrap", nlohmann::json::object());
    take(bs, "resamples", c.bootstrap_resamples);
    take(bs, "seed_base", c.seed_base);
    take(bs, "threads", c.threads);
    take(bs, "level", c.ci_level);

    const auto sc = j.value("scores", nlohmann::json::object());
    c.scores.tx = path(sc, "tx");
    if (sc.contains("tx_stage")) c.scores.tx_stage = parse_stage(sc.at("tx_stage").get<std::string>());
    if (sc.contains("actor_temporal")) {
      c.scores.actor_temporal = (base_dir / sc.at("actor_temporal").get<std::string>()).lexically_normal().string();
    }
    c.scores.actor_static = path(sc, "actor_static");
    c.scores.actor_validation = path(sc, "actor_validation");
    if (sc.contains("actor_stage")) c.scores.actor_stage = parse_stage(sc.at("actor_stage").get<std::string>());

    const auto hy = j.value("hybrid", nlohmann::json::object());
    take(hy, "enabled", c.hybrid_enabled);
    take(hy, "tune", c.hybrid_tune);
    take(hy, "alpha", c.hybrid_params.alpha);
    take(hy, "delta", c.hybrid_params.delta);
    take(hy, "alpha_grid", c.hybrid_alpha_grid);
    take(hy, "delta_grid", c.hybrid_delta_grid);

    const auto ab = j.value("ablation", nlohmann::json::object());
    take(ab, "threshold", c.ablation_threshold);
    if (ab.contains("regimes")) {
      for (const auto& r : ab.at("regimes")) {
        RegimeScores rs;
        rs.name = r.at("name").get<std::string>();
        rs.tx = resolve_path(base_dir, r.at("tx").get<std::string>());
        rs.actor = resolve_path(base_dir, r.at("actor").get<std::string>());
        c.ablation_regimes.push_back(std::move(rs));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& toml_path) {
  const auto j = toml::parse_file(toml_path);
  fs::path base = toml_path.parent_path();
  if (base.empty()) base = ".";
  return from_json(j, base);
}

nlohmann::ordered_json RunConfig::to_json() const {
  auto rel = [&](const fs::path& p) { return p.lexically_relative(base_dir).generic_string(); };
  auto opt = [&](const std::optional<fs::path>& p) -> nlohmann::ordered_json {
    return p ? nlohmann::ordered_json(rel(*p)) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j;
  j["data"] = {{"transactions", rel(data.transactions)},
               {"addr_features", opt(data.addr_features)},
               {"input_edges", rel(data.input_edges)},
               {"output_edges", rel(data.output_edges)},
               {"txtx_edges", opt(data.txtx_edges)},
               {"tx_labels", opt(data.tx_labels)},
               {"addr_labels", opt(data.addr_labels)},
               {"value_column", value_column ? nlohmann::ordered_json(*value_column) : nlohmann::ordered_json(nullptr)}};
  j["split"] = {{"train", {split.train.lo, split.train.hi}},
                {"validation", {split.validation.lo, split.validation.hi}},
                {"test", {split.test.lo, split.test.hi}}};
  std::vector<std::string> ops, dirs;
  for (auto o : operator_sweep) ops.emplace_back(to_string(o));
  for (auto d : direction_sweep) dirs.emplace_back(to_string(d));
  j["eval"] = {{"budget_fractions", budget_fractions},
               {"primary_operator", to_string(primary_operator)},
               {"direction", to_string(direction)},
               {"rbo_persistence", rbo_persistence},
               {"n_cap", n_cap},
               {"top_m", top_m},
               {"operators", ops},
               {"directions", dirs},
               {"strata", strata},
               {"brier_gate", brier_gate}};
  j["bootstrap"] = {{"resamples", bootstrap_resamples}, {"seed_base", seed_base}, {"level", ci_level}};
  j["scores"] = {{"tx", opt(scores.tx)},
                 {"tx_stage", to_string(scores.tx_stage)},
                 {"actor_temporal", scores.actor_temporal ? nlohmann::ordered_json(rel(*scores.actor_temporal))
                                                          : nlohmann::ordered_json(nullptr)},
                 {"actor_static", opt(scores.actor_static)},
                 {"actor_validation", opt(scores.actor_validation)},
                 {"actor_stage", to_string(scores.actor_stage)}};
  j["hybrid"] = {{"enabled", hybrid_enabled},
                 {"tune", hybrid_tune},
                 {"alpha", hybrid_params.alpha},
                 {"delta", hybrid_params.delta},
                 {"alpha_grid", hybrid_alpha_grid},
                 {"delta_grid", hybrid_delta_grid}};
  auto regimes = nlohmann::ordered_json::array();
  for (const auto& r : ablation_regimes) regimes.push_back({{"name", r.name}, {"tx", rel(r.tx)}, {"actor", rel(r.actor)}});
  j["ablation"] = {{"threshold", ablation_threshold}, {"regimes", regimes}};
  return j;
}

}  // namespace granq
