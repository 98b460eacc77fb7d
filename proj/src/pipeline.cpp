#include "granq/pipeline.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "granq/aggregation.hpp"
#include "granq/error.hpp"
#include "granq/hybrid.hpp"
#include "granq/metrics.hpp"
#include "granq/parallel.hpp"

namespace granq {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

ojson opt(const std::optional<real>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson burden_json(const BurdenReport& b) {
  return {{"k", b.k_actual},
          {"illicit", b.illicit},
          {"licit", b.licit},
          {"unknown", b.unknown},
          {"illicit_per_100", b.illicit_per_100},
          {"licit_per_100", b.licit_per_100},
          {"unknown_per_100", b.unknown_per_100},
          {"reviews_per_tp", opt(b.reviews_per_tp)},
          {"yield", opt(b.yield)}};
}

std::size_t count_illicit(std::span<const AddrHandle> universe, const LabelTable& labels) {
  return static_cast<std::size_t>(std::ranges::count_if(universe, [&](AddrHandle a) { return labels.at(a) == Label::illicit; }));
}

CalibrationFit fit_level(Level level, std::span<const real> raw, std::span<const Label> labels, bool fit) {
  CalibrationFit f;
  f.level = level;
  f.samples = raw.size();
  f.positives = static_cast<std::size_t>(std::ranges::count(labels, Label::illicit));
  f.brier_raw = brier(raw, labels);
  f.ece_raw = ece(raw, labels);
  if (fit) {
    f.params = fit_platt(raw, labels);
    f.rejected = !f.params->increasing();
    std::vector<real> cal(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) cal[i] = (*f.params)(raw[i]);
    f.brier_platt = brier(cal, labels);
    f.ece_platt = ece(cal, labels);
  } else {
    f.brier_platt = f.brier_raw;
    f.ece_platt = f.ece_raw;
  }
  return f;
}

ojson fit_json(const CalibrationFit& f, real gate) {
  ojson j;
  j["level"] = to_string(f.level);
  j["fitted"] = f.params.has_value();
  if (f.params) {
    j["a"] = f.params->a;
    j["b"] = f.params->b;
    j["iterations"] = f.params->iterations;
    j["gradient_norm"] = f.params->gradient_norm;
    j["increasing"] = f.params->increasing();
  }
  j["applied"] = f.applied();
  j["samples"] = f.samples;
  j["positives"] = f.positives;
  j["brier_raw"] = f.brier_raw;
  j["brier_platt"] = f.brier_platt;
  j["ece_raw"] = f.ece_raw;
  j["ece_platt"] = f.ece_platt;
  // The fit optimises log-loss, so Brier can in rare cases get worse; flag it.
  j["brier_not_improved"] = f.brier_platt > f.brier_raw + 1e-6;
  j["brier_gate_passed"] = f.brier_platt < gate;
  return j;
}

std::string rel(const fs::path& base, const std::string& p) {
  std::error_code ec;
  auto a = fs::weakly_canonical(p, ec);
  auto b = fs::weakly_canonical(base, ec);
  auto r = a.lexically_relative(b);
  return (r.empty() ? fs::path(p) : r).generic_string();
}

}  // namespace

ojson to_json(const BootstrapResult& r) {
  ojson ci;
  ci["low"] = opt(r.ci_low);
  ci["high"] = opt(r.ci_high);
  ci["B"] = r.resamples;
  ci["defined_samples"] = r.defined_samples;
  ci["seed_base"] = r.seed_base;
  ci["level"] = r.level;
  ci["brackets_point"] = r.brackets_point();
  return {{"point", opt(r.point_estimate)}, {"ci", ci}};
}

ojson to_json(const Queue& q, const LedgerGraph& graph, bool with_members) {
  ojson j;
  j["universe_size"] = q.universe_size;
  j["budget_fraction"] = q.budget_fraction;
  j["nominal_k"] = q.nominal_k;
  j["k"] = q.size();
  j["tie_expansion"] = q.tie_expansion;
  j["tie_warning"] = q.tie_warning;
  if (with_members) {
    auto m = ojson::array();
    for (const auto& [a, s] : q.members) m.push_back({{"id", graph.addr_id(a)}, {"score", s}});
    j["members"] = m;
  }
  return j;
}

BootstrapOptions RunContext::bootstrap() const {
  return {config.bootstrap_resamples, config.seed_base, config.threads, config.ci_level};
}

ScoreTable RunContext::load(const fs::path& p, Level level, Stage stage, const std::string& regime) {
  ScoreLoadInfo info;
  auto t = load_scores(p, data.graph, level, stage, regime, &info);
  score_files.push_back(std::move(info));
  return t;
}

namespace {

ScoreTable calibrated_actor(RunContext& ctx, const fs::path& p) {
  auto raw = ctx.load(p, Level::actor, ctx.config.scores.actor_stage, "main");
  if (ctx.actor_fit && ctx.actor_fit->applied()) return apply_platt(raw, *ctx.actor_fit->params);
  return raw;
}

}  // namespace

ScoreTable RunContext::actor_at(Timestep t) { return calibrated_actor(*this, config.scores.actor_at(t)); }

ScoreTable RunContext::actor_static() {
  if (!config.scores.actor_static) throw ValidationError("scores.actor_static is not configured");
  return calibrated_actor(*this, *config.scores.actor_static);
}

ScoreTable RunContext::actor_validation() {
  if (!config.scores.actor_validation) throw ValidationError("scores.actor_validation is not configured");
  return calibrated_actor(*this, *config.scores.actor_validation);
}

void validate_inputs(const RunConfig& c, const PipelineBlocks& blocks) {
  auto need = [](const std::optional<fs::path>& p, const std::string& what) {
    if (!p) throw ValidationError("missing configuration: " + what);
    if (!fs::exists(*p)) throw ValidationError("missing file for " + what + ": " + p->string());
  };
  if (c.cache && fs::exists(*c.cache)) {
    // Raw data files are not needed when the cache is present.
  } else {
    need(c.data.transactions.empty() ? std::nullopt : std::optional<fs::path>(c.data.transactions), "data.transactions");
    need(c.data.input_edges, "data.input_edges");
    need(c.data.output_edges, "data.output_edges");
    for (const auto& [p, what] : {std::pair{c.data.addr_features, "data.addr_features"},
                                  std::pair{c.data.txtx_edges, "data.txtx_edges"},
                                  std::pair{c.data.tx_labels, "data.tx_labels"},
                                  std::pair{c.data.addr_labels, "data.addr_labels"}}) {
      if (p) need(p, what);
    }
  }
  need(c.scores.tx, "scores.tx");
  const bool actor_needed = blocks.temporal || blocks.static_split || blocks.hybrid || blocks.ablation;
  if (actor_needed && c.scores.actor_stage == Stage::raw) need(c.scores.actor_validation, "scores.actor_validation");
  if (blocks.temporal || blocks.hybrid) {
    for (Timestep t = c.split.test.lo; t <= c.split.test.hi; ++t) {
      need(c.scores.actor_at(t), "scores.actor_temporal at t=" + std::to_string(t));
    }
  }
  if (blocks.static_split || blocks.ablation) need(c.scores.actor_static, "scores.actor_static");
  if (blocks.hybrid) need(c.scores.actor_validation, "scores.actor_validation");
  if (blocks.ablation) {
    for (const auto& r : c.ablation_regimes) {
      need(r.tx, "ablation regime '" + r.name + "' tx scores");
      need(r.actor, "ablation regime '" + r.name + "' actor scores");
    }
  }
}

RunContext prepare(const RunConfig& config, const PipelineBlocks& blocks) {
  validate_inputs(config, blocks);
  RunContext ctx;
  ctx.config = config;
  ctx.data = config.cache && fs::exists(*config.cache) ? load_cache(*config.cache)
                                                        : load_dataset(config.data, config.split);
  const auto& g = ctx.data.graph;

  auto raw = ctx.load(*config.scores.tx, Level::transaction, config.scores.tx_stage, "main");
  {
    std::vector<real> s;
    std::vector<Label> l;
    for (Timestep t = config.split.validation.lo; t <= config.split.validation.hi; ++t) {
      for (TxHandle tx : g.txs_at(t)) {
        const Label lab = ctx.data.tx_labels.at(tx);
        if (lab == Label::unknown || !raw.has(tx.index())) continue;
        s.push_back(raw[tx.index()]);
        l.push_back(lab);
      }
    }
    const bool fit = config.scores.tx_stage == Stage::raw;
    if (fit && s.empty()) throw ValidationError("transaction calibration needs labeled validation transactions");
    if (!s.empty()) ctx.tx_fit = fit_level(Level::transaction, s, l, fit);
    ctx.tx = fit && ctx.tx_fit->applied() ? apply_platt(raw, *ctx.tx_fit->params) : raw;
  }

  const bool actor_needed = blocks.temporal || blocks.static_split || blocks.hybrid || blocks.ablation;
  if (actor_needed && config.scores.actor_validation) {
    auto val = ctx.load(*config.scores.actor_validation, Level::actor, config.scores.actor_stage, "main");
    std::vector<real> s;
    std::vector<Label> l;
    for (std::size_t i = 0; i < val.size(); ++i) {
      const Label lab = ctx.data.addr_labels[i];
      if (!val.has(i) || lab == Label::unknown) continue;
      s.push_back(val[i]);
      l.push_back(lab);
    }
    const bool fit = config.scores.actor_stage == Stage::raw;
    if (fit && s.empty()) throw ValidationError("actor calibration needs labeled validation addresses");
    if (!s.empty()) ctx.actor_fit = fit_level(Level::actor, s, l, fit);
  }
  return ctx;
}

Projection project_onto(const RunContext& ctx, std::span<const AddrHandle> universe, Horizon horizon, Operator op,
                        Direction direction) {
  const auto& c = ctx.config;
  ProjectionSpec spec{op, direction, horizon, c.n_cap, c.top_m};
  auto r = project_scores(ctx.data.graph, ctx.tx, spec, universe);
  Projection p;
  p.universe.assign(universe.begin(), universe.end());
  p.scores = std::move(r.scores);
  p.all_zero = r.all_zero;
  std::vector<int> count_of(ctx.data.graph.addr_count(), 0);
  for (std::size_t i = 0; i < r.projected.size(); ++i) count_of[r.projected[i].index()] = r.incident_counts[i];
  for (AddrHandle a : r.excluded) p.scores.set(a.index(), 0.0);
  p.zero_filled = r.excluded.size();
  p.counts.reserve(universe.size());
  for (AddrHandle a : universe) p.counts.push_back(count_of[a.index()]);
  return p;
}

namespace {

void require_cover(const ScoreTable& t, std::span<const AddrHandle> universe, const LedgerGraph& g,
                   const std::string& what) {
  std::size_t missing = 0;
  std::string first;
  for (AddrHandle a : universe) {
    if (!t.has(a.index())) {
      if (missing++ == 0) first = g.addr_id(a);
    }
  }
  if (missing) {
    throw ValidationError(what + " lacks scores for " + std::to_string(missing) + " universe address(es), e.g. '" +
                          first + "'");
  }
}

struct QueuePair {
  Queue tx;
  Queue actor;
};

ojson pair_metrics(const RunContext& ctx, const QueuePair& q, const Projection& p, std::size_t total_illicit) {
  const auto& labels = ctx.data.addr_labels;
  ojson j;
  j["nominal_k"] = q.tx.nominal_k;
  j["k_tx"] = q.tx.size();
  j["k_actor"] = q.actor.size();
  j["jaccard"] = jaccard(q.tx, q.actor);
  j["rbo"] = rbo(q.tx, q.actor, ctx.config.rbo_persistence);
  j["tx"] = burden_json(burden(q.tx, labels, total_illicit));
  j["actor"] = burden_json(burden(q.actor, labels, total_illicit));
  j["tx_labeled_only"] = burden_json(burden(q.tx, labels, total_illicit, true));
  j["actor_labeled_only"] = burden_json(burden(q.actor, labels, total_illicit, true));
  j["actor_only_illicit_rate"] = opt(actor_only_illicit_rate(q.actor, q.tx, labels));
  j["fragmentation"] = fragmentation(q.tx, p.universe, p.counts);
  j["tie_expansion_tx"] = q.tx.tie_expansion;
  j["tie_expansion_actor"] = q.actor.tie_expansion;
  j["tie_warning"] = q.tx.tie_warning || q.actor.tie_warning;
  return j;
}

// Arithmetic and K-weighted means of a numeric row field, skipping nulls.
ojson means(const std::vector<ojson>& rows, const std::vector<std::string>& path) {
  std::vector<real> xs, ks;
  for (const auto& r : rows) {
    const ojson* v = &r;
    for (const auto& key : path) {
      if (!v->contains(key)) {
        v = nullptr;
        break;
      }
      v = &v->at(key);
    }
    if (!v || v->is_null()) continue;
    xs.push_back(v->get<real>());
    ks.push_back(r.at("nominal_k").get<real>());
  }
  ojson j;
  j["n"] = xs.size();
  j["arithmetic"] = xs.empty() ? ojson(nullptr) : ojson(arithmetic_mean(xs));
  j["k_weighted"] = xs.empty() ? ojson(nullptr) : ojson(k_weighted_mean(xs, ks));
  return j;
}

ojson summary_means(const std::vector<ojson>& rows) {
  ojson m;
  m["jaccard"] = means(rows, {"jaccard"});
  m["rbo"] = means(rows, {"rbo"});
  m["tx_illicit_per_100"] = means(rows, {"tx", "illicit_per_100"});
  m["actor_illicit_per_100"] = means(rows, {"actor", "illicit_per_100"});
  m["tx_labeled_only_illicit_per_100"] = means(rows, {"tx_labeled_only", "illicit_per_100"});
  m["actor_labeled_only_illicit_per_100"] = means(rows, {"actor_labeled_only", "illicit_per_100"});
  m["tx_yield"] = means(rows, {"tx", "yield"});
  m["actor_yield"] = means(rows, {"actor", "yield"});
  m["fragmentation"] = means(rows, {"fragmentation"});
  return m;
}

ojson strata_json(const std::vector<StratumResult>& strata) {
  auto arr = ojson::array();
  for (const auto& s : strata) {
    arr.push_back({{"stratum", s.name},
                   {"index", s.index},
                   {"universe_size", s.universe_size},
                   {"k", s.k},
                   {"min_count", s.min_count},
                   {"max_count", s.max_count},
                   {"jaccard", opt(s.jaccard)}});
  }
  return arr;
}

struct SweepCell {
  real jaccard = 0;
  real tx_illicit_per_100 = 0;
  std::optional<real> tx_yield;
  std::size_t zero_filled = 0;
};

SweepCell sweep_cell(const RunContext& ctx, std::span<const AddrHandle> universe, Horizon h, Operator op, Direction d,
                     const Queue& actor_q, std::size_t total_illicit) {
  auto p = project_onto(ctx, universe, h, op, d);
  auto q = top_k(ctx.data.graph, p.scores, universe, ctx.config.primary_budget());
  auto b = burden(q, ctx.data.addr_labels, total_illicit);
  return {jaccard(q, actor_q), b.illicit_per_100, b.yield, p.zero_filled};
}

}  // namespace

ojson temporal_block(RunContext& ctx) {
  const auto& c = ctx.config;
  const auto& g = ctx.data.graph;
  std::vector<Timestep> steps;
  for (Timestep t = c.split.test.lo; t <= c.split.test.hi; ++t) steps.push_back(t);

  std::vector<ScoreTable> actor(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) actor[i] = ctx.actor_at(steps[i]);

  struct Cell {
    bool skipped = false;
    std::vector<ojson> rows;  // per budget
    std::vector<SweepCell> ops, dirs;
    ojson strata;
  };
  std::vector<Cell> cells(steps.size());
  parallel_for(steps.size(), c.threads, [&](std::size_t i) {
    const Timestep t = steps[i];
    Cell& cell = cells[i];
    auto active = active_set(g, t);
    if (active.members.empty()) {
      cell.skipped = true;
      return;
    }
    const auto& u = active.members;
    require_cover(actor[i], u, g, "actor scores at t=" + std::to_string(t));
    const std::size_t illicit = count_illicit(u, ctx.data.addr_labels);
    auto p = project_onto(ctx, u, Horizon::exact(t), c.primary_operator, c.direction);
    Queue primary_actor;
    for (real beta : c.budget_fractions) {
      QueuePair q{top_k(g, p.scores, u, beta), top_k(g, actor[i], u, beta)};
      if (beta == c.primary_budget()) primary_actor = q.actor;
      ojson row;
      row["t"] = t;
      row["active"] = u.size();
      row["illicit"] = illicit;
      row.update(pair_metrics(ctx, q, p, illicit));
      row["zero_filled"] = p.zero_filled;
      row["all_zero"] = p.all_zero;
      cell.rows.push_back(std::move(row));
    }
    for (Operator op : c.operator_sweep) {
      cell.ops.push_back(sweep_cell(ctx, u, Horizon::exact(t), op, c.direction, primary_actor, illicit));
    }
    for (Direction d : c.direction_sweep) {
      cell.dirs.push_back(sweep_cell(ctx, u, Horizon::exact(t), c.primary_operator, d, primary_actor, illicit));
    }
    if (c.strata) {
      if (u.size() >= 10) {
        cell.strata = strata_json(degree_strata(g, u, p.counts, p.scores, actor[i], c.primary_budget()));
      } else {
        cell.strata = nullptr;
      }
    }
  });

  ojson out;
  auto budgets = ojson::array();
  for (std::size_t b = 0; b < c.budget_fractions.size(); ++b) {
    std::vector<ojson> rows;
    auto skipped = ojson::array();
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (cells[i].skipped) skipped.push_back(steps[i]);
      else rows.push_back(cells[i].rows[b]);
    }
    budgets.push_back({{"budget", c.budget_fractions[b]},
                       {"rows", rows},
                       {"skipped_timesteps", skipped},
                       {"means", summary_means(rows)}});
  }
  out["budgets"] = budgets;

  auto sweep = [&](auto&& names, auto member) {
    auto arr = ojson::array();
    for (std::size_t k = 0; k < names.size(); ++k) {
      auto rows = ojson::array();
      std::vector<real> js, ill;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        if (cells[i].skipped) continue;
        const SweepCell& s = (cells[i].*member)[k];
        rows.push_back({{"t", steps[i]},
                        {"jaccard", s.jaccard},
                        {"tx_illicit_per_100", s.tx_illicit_per_100},
                        {"tx_yield", opt(s.tx_yield)},
                        {"zero_filled", s.zero_filled}});
        js.push_back(s.jaccard);
        ill.push_back(s.tx_illicit_per_100);
      }
      arr.push_back({{"name", names[k]},
                     {"rows", rows},
                     {"mean_jaccard", js.empty() ? ojson(nullptr) : ojson(arithmetic_mean(js))},
                     {"mean_tx_illicit_per_100", ill.empty() ? ojson(nullptr) : ojson(arithmetic_mean(ill))}});
    }
    return arr;
  };
  std::vector<std::string> op_names, dir_names;
  for (auto o : c.operator_sweep) op_names.emplace_back(to_string(o));
  for (auto d : c.direction_sweep) dir_names.emplace_back(to_string(d));
  out["operator_sweep"] = sweep(op_names, &Cell::ops);
  out["direction_sweep"] = sweep(dir_names, &Cell::dirs);

  auto history = illicit_history(g, ctx.data.addr_labels, std::min(g.min_timestep(), c.split.test.lo), c.split.test.hi);
  auto novel = ojson::array();
  for (Timestep t : steps) {
    auto np = novel_positive_rate(t, history);
    novel.push_back({{"t", t}, {"novel", np.novel}, {"total", np.total}, {"rate", opt(np.rate)}});
  }
  out["novel_positive"] = novel;

  if (c.strata) {
    auto strata = ojson::array();
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (!cells[i].skipped) strata.push_back({{"t", steps[i]}, {"strata", cells[i].strata}});
    }
    out["strata"] = strata;
  }
  return out;
}

ojson static_block(RunContext& ctx) {
  const auto& c = ctx.config;
  const auto& g = ctx.data.graph;
  const auto u = common_universe(g, UniverseSpec::static_split(c.split.test));
  auto actor = ctx.actor_static();
  require_cover(actor, u, g, "static actor scores");
  const std::size_t illicit = count_illicit(u, ctx.data.addr_labels);
  const Horizon h = Horizon::window(c.split.test);
  auto p = project_onto(ctx, u, h, c.primary_operator, c.direction);
  const auto activity = activity_count(g, u, h);

  ojson out;
  out["universe_size"] = u.size();
  out["illicit"] = illicit;
  out["zero_filled"] = p.zero_filled;
  out["all_zero"] = p.all_zero;

  auto budgets = ojson::array();
  Queue primary_actor;
  for (real beta : c.budget_fractions) {
    QueuePair q{top_k(g, p.scores, u, beta), top_k(g, actor, u, beta)};
    if (beta == c.primary_budget()) primary_actor = q.actor;
    ojson b;
    b["budget"] = beta;
    b.update(pair_metrics(ctx, q, p, illicit));
    auto act = activity_queue(g, u, activity, beta);
    b["activity_baseline"] = {{"k", act.size()},
                              {"jaccard_tx", jaccard(act, q.tx)},
                              {"jaccard_actor", jaccard(act, q.actor)},
                              {"illicit_per_100", burden(act, ctx.data.addr_labels, illicit).illicit_per_100}};
    budgets.push_back(std::move(b));
  }
  out["budgets"] = budgets;

  // Universe-level paired bootstrap at the primary budget.
  auto paired = make_paired(g, u, p.scores, actor, ctx.data.addr_labels);
  auto results = bootstrap_universe(paired, paired_statistics(c.primary_budget(), c.rbo_persistence),
                                    PairedStatisticNames::count, ctx.bootstrap());
  const auto names = paired_statistic_names();
  ojson boot;
  boot["budget"] = c.primary_budget();
  for (std::size_t i = 0; i < names.size(); ++i) boot[names[i]] = to_json(results[i]);
  out["bootstrap"] = boot;

  auto ops = ojson::array();
  for (Operator op : c.operator_sweep) {
    auto s = sweep_cell(ctx, u, h, op, c.direction, primary_actor, illicit);
    ops.push_back({{"name", to_string(op)}, {"jaccard", s.jaccard}, {"tx_illicit_per_100", s.tx_illicit_per_100}});
  }
  out["operator_sweep"] = ops;
  if (c.strata && u.size() >= 10) out["strata"] = strata_json(degree_strata(g, u, activity, p.scores, actor, c.primary_budget()));
  return out;
}

ojson hybrid_block(RunContext& ctx) {
  const auto& c = ctx.config;
  const auto& g = ctx.data.graph;
  const real beta = c.primary_budget();
  ojson out;
  out["budget"] = beta;

  // Validation grid search.
  auto val_actor = ctx.actor_validation();
  auto val_all = split_addresses(g, c.split.validation);
  auto vp = project_onto(ctx, val_all, Horizon::window(c.split.validation), c.primary_operator, c.direction);
  auto vu = common_universe(g, UniverseSpec::static_split(c.split.validation, true), &vp.scores, &val_actor);
  auto vpaired = make_paired(g, vu, vp.scores, val_actor, ctx.data.addr_labels);
  auto grid = grid_search(vpaired, beta, c.hybrid_alpha_grid, c.hybrid_delta_grid);
  auto surface = ojson::array();
  for (const auto& cell : grid.surface) {
    surface.push_back({{"alpha", cell.params.alpha},
                       {"delta", cell.params.delta},
                       {"top_k_illicit_fraction", cell.top_k_illicit_fraction},
                       {"yield", opt(cell.yield)},
                       {"k", cell.queue_size},
                       {"escalation_fallback", cell.escalation_fallback}});
  }
  out["validation"] = {{"universe_size", vu.size()},
                       {"illicit", vpaired.illicit_count()},
                       {"best", {{"alpha", grid.best.params.alpha},
                                 {"delta", grid.best.params.delta},
                                 {"top_k_illicit_fraction", grid.best.top_k_illicit_fraction},
                                 {"yield", opt(grid.best.yield)}}},
                       {"surface", surface}};
  const HybridParams params = c.hybrid_tune ? grid.best.params : c.hybrid_params;
  out["params"] = {{"alpha", params.alpha}, {"delta", params.delta}, {"tuned", c.hybrid_tune}};

  // Temporal evaluation over the test timesteps.
  std::vector<TimestepUniverse> steps;
  for (Timestep t = c.split.test.lo; t <= c.split.test.hi; ++t) {
    auto active = active_set(g, t);
    if (active.members.empty()) continue;
    auto actor = ctx.actor_at(t);
    auto p = project_onto(ctx, active.members, Horizon::exact(t), c.primary_operator, c.direction);
    auto u = common_universe(g, UniverseSpec::temporal(t, true), &p.scores, &actor);
    steps.push_back({t, make_paired(g, u, p.scores, actor, ctx.data.addr_labels)});
  }
  if (steps.empty()) throw ValidationError("hybrid evaluation found no active test timestep");
  auto ev = evaluate_hybrid(steps, beta, params, ctx.bootstrap());
  auto rows = ojson::array();
  for (const auto& r : ev.rows) {
    rows.push_back({{"t", r.t},
                    {"universe_size", r.universe_size},
                    {"illicit", r.illicit},
                    {"nominal_k", r.nominal_k},
                    {"k", r.hybrid_k},
                    {"hybrid_yield", r.hybrid_yield},
                    {"tx_yield", r.tx_yield},
                    {"actor_yield", r.actor_yield},
                    {"best_single", r.best_single},
                    {"improvement", r.improvement},
                    {"hybrid_illicit_per_100", r.hybrid_illicit_per_100},
                    {"escalation_fallback", r.escalation_fallback}});
  }
  out["temporal"] = {{"rows", rows},
                     {"mean_hybrid_yield", ev.mean_hybrid_yield},
                     {"mean_best_single", ev.mean_best_single},
                     {"mean_improvement", to_json(ev.improvement_ci)}};

  // Static hybrid queue over the test split.
  auto actor = ctx.actor_static();
  auto all = split_addresses(g, c.split.test);
  auto p = project_onto(ctx, all, Horizon::window(c.split.test), c.primary_operator, c.direction);
  auto u = common_universe(g, UniverseSpec::static_split(c.split.test, true), &p.scores, &actor);
  auto hq = hybrid_queue(g, p.scores, actor, u, beta, params);
  const std::size_t illicit = count_illicit(u, ctx.data.addr_labels);
  auto qt = top_k(g, p.scores, u, beta);
  auto qa = top_k(g, actor, u, beta);
  out["static"] = {{"universe_size", u.size()},
                   {"consensus_slots", hq.selection.consensus_slots},
                   {"escalation_slots", hq.selection.escalation_slots},
                   {"escalation_fallback", hq.selection.escalation_fallback},
                   {"hybrid", burden_json(burden(hq.queue, ctx.data.addr_labels, illicit))},
                   {"tx", burden_json(burden(qt, ctx.data.addr_labels, illicit))},
                   {"actor", burden_json(burden(qa, ctx.data.addr_labels, illicit))},
                   {"jaccard_hybrid_tx", jaccard(hq.queue, qt)},
                   {"jaccard_hybrid_actor", jaccard(hq.queue, qa)}};
  return out;
}

real main_static_jaccard(RunContext& ctx) {
  const auto& c = ctx.config;
  const auto& g = ctx.data.graph;
  const auto u = common_universe(g, UniverseSpec::static_split(c.split.test));
  auto actor = ctx.actor_static();
  require_cover(actor, u, g, "static actor scores");
  auto p = project_onto(ctx, u, Horizon::window(c.split.test), c.primary_operator, c.direction);
  return jaccard(top_k(g, p.scores, u, c.primary_budget()), top_k(g, actor, u, c.primary_budget()));
}

ojson ablation_block(RunContext& ctx, const std::optional<real>& main_jaccard) {
  const auto& c = ctx.config;
  const auto& g = ctx.data.graph;
  const real beta = c.primary_budget();
  const auto u = common_universe(g, UniverseSpec::static_split(c.split.test));
  const Horizon h = Horizon::window(c.split.test);

  auto regimes = ojson::array();
  std::vector<real> js;
  if (main_jaccard) {
    regimes.push_back({{"name", "main"}, {"jaccard", *main_jaccard}, {"actor_zero_filled", 0}});
    js.push_back(*main_jaccard);
  }
  for (const auto& r : c.ablation_regimes) {
    auto tx = ctx.load(r.tx, Level::transaction, Stage::raw, r.name);
    auto actor = ctx.load(r.actor, Level::actor, Stage::raw, r.name);
    ProjectionSpec spec{c.primary_operator, c.direction, h, c.n_cap, c.top_m};
    auto proj = project_scores(g, tx, spec, u);
    for (AddrHandle a : proj.excluded) proj.scores.set(a.index(), 0.0);
    // Regime actor files may omit addresses their feature set cannot score.
    std::size_t filled = 0;
    for (AddrHandle a : u) {
      if (!actor.has(a.index())) {
        actor.set(a.index(), 0.0);
        ++filled;
      }
    }
    const real j = jaccard(top_k(g, proj.scores, u, beta), top_k(g, actor, u, beta));
    regimes.push_back({{"name", r.name}, {"jaccard", j}, {"actor_zero_filled", filled}});
    js.push_back(j);
  }
  ojson out;
  out["budget"] = beta;
  out["threshold"] = c.ablation_threshold;
  out["regimes"] = regimes;
  out["verdict"] = js.empty() ? ojson(nullptr) : ojson(to_string(ablation_verdict(js, c.ablation_threshold)));
  return out;
}

ojson calibration_block(const RunContext& ctx) {
  ojson out;
  out["gate"] = ctx.config.brier_gate;
  out["tx"] = ctx.tx_fit ? fit_json(*ctx.tx_fit, ctx.config.brier_gate) : ojson(nullptr);
  out["actor"] = ctx.actor_fit ? fit_json(*ctx.actor_fit, ctx.config.brier_gate) : ojson(nullptr);
  return out;
}

ojson provenance_block(const RunContext& ctx) {
  const auto& base = ctx.config.base_dir;
  auto inputs = ojson::array();
  for (const auto& f : ctx.data.report.files) {
    inputs.push_back({{"role", f.role}, {"path", rel(base, f.path)}, {"sha256", f.sha256}, {"rows", f.rows}});
  }
  std::map<std::string, const ScoreLoadInfo*> scores;
  for (const auto& s : ctx.score_files) scores.emplace(rel(base, s.path), &s);
  for (const auto& [path, s] : scores) {
    inputs.push_back({{"role", "scores"}, {"path", path}, {"sha256", s->sha256}, {"rows", s->rows}});
  }
  ojson out;
  out["software"] = std::string("granq ") + kVersion;
  out["seed_base"] = ctx.config.seed_base;
  out["inputs"] = inputs;
  out["conventions"] = {
      {"k", "floor(budget * |universe|); ties at the boundary score are all included"},
      {"tie_order", "score descending, then address id ascending"},
      {"rbo", "extrapolated RBO at depth max(|l1|, |l2|)"},
      {"noisy_or", "-expm1(sum log1p(-s)); exactly 1 when any score is 1"},
      {"ece_bins", "10 equal-width bins, right-open, last bin closed"},
      {"quantiles", "type 7 (linear interpolation between order statistics)"},
      {"rng", "SplitMix64; resample i seeded with seed_base + i"},
      {"zero_fill", "universe addresses without an incident transaction on the chosen side score 0"},
      {"yield_means", "timesteps without illicit addresses have undefined yield and are left out of yield means"}};
  return out;
}

ojson run_pipeline(const RunConfig& config, const PipelineBlocks& blocks) {
  RunContext ctx = prepare(config, blocks);
  ojson out;
  out["config"] = config.to_json();
  out["ingest"] = to_json(ctx.data.report);
  out["ingest"].erase("files");
  out["calibration"] = calibration_block(ctx);
  if (blocks.temporal) out["temporal"] = temporal_block(ctx);
  std::optional<real> main_j;
  if (blocks.static_split) {
    out["static"] = static_block(ctx);
    for (const auto& b : out["static"]["budgets"]) {
      if (b["budget"].get<real>() == config.primary_budget()) main_j = b["jaccard"].get<real>();
    }
  }
  if (blocks.hybrid && config.hybrid_enabled) out["hybrid"] = hybrid_block(ctx);
  if (blocks.ablation) {
    if (!main_j) main_j = main_static_jaccard(ctx);
    out["ablation"] = ablation_block(ctx, main_j);
  }
  out["provenance"] = provenance_block(ctx);
  return out;
}

}  // namespace granq
