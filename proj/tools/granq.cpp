// granq: command-line front end.
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "granq/aggregation.hpp"
#include "granq/calibration.hpp"
#include "granq/csv.hpp"
#include "granq/error.hpp"
#include "granq/metrics.hpp"
#include "granq/pipeline.hpp"
#include "granq/report.hpp"
#include "granq/synth.hpp"
#include "granq/toml_lite.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using namespace granq;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed_base;
  std::optional<unsigned> threads;
  std::string out;
};

RunConfig load_config(const Globals& g) {
  if (g.config.empty()) throw ValidationError("--config is required");
  auto c = RunConfig::load(g.config);
  if (g.seed_base) c.seed_base = *g.seed_base;
  if (g.threads) c.threads = *g.threads;
  c.validate();
  return c;
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
}

void emit(const Globals& g, const ojson& j, const std::string& default_name) {
  const std::string text = j.dump(2) + "\n";
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  fs::path p = g.out;
  if (fs::is_directory(p)) p /= default_name;
  write_text(p, text);
}

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json read_spec(const fs::path& p) {
  if (p.extension() == ".json") {
    std::ifstream f(p);
    if (!f) throw ValidationError("cannot open " + p.string());
    return nlohmann::json::parse(f);
  }
  return toml::parse_file(p);
}

std::map<std::string, real> read_id_values(const fs::path& p, bool labels) {
  csv::Reader r(p);
  std::vector<std::string_view> f;
  std::map<std::string, real> out;
  bool first = true;
  while (r.next(f)) {
    if (f.size() < 2) throw ValidationError(r.where("expected id,value"));
    auto v = csv::parse_double(f[1]);
    if (!v) {
      if (first) {
        first = false;
        continue;  // header
      }
      if (labels && f[1] == "unknown") {
        out[std::string(f[0])] = 3;
        continue;
      }
      throw ValidationError(r.where("not a number: '" + std::string(f[1]) + "'"));
    }
    first = false;
    if (!out.emplace(std::string(f[0]), *v).second) throw ValidationError(r.where("duplicate id '" + std::string(f[0]) + "'"));
  }
  return out;
}

int run_calibrate(const Globals& g, const std::string& scores_path, const std::string& labels_path,
                  const std::string& apply_in, const std::string& apply_out) {
  auto scores = read_id_values(scores_path, false);
  auto labels = read_id_values(labels_path, true);
  std::vector<real> s;
  std::vector<Label> l;
  for (const auto& [id, v] : scores) {
    auto it = labels.find(id);
    if (it == labels.end() || it->second == 3) continue;
    if (it->second != 1 && it->second != 2) throw ValidationError("label for '" + id + "' is not 1, 2 or 3");
    s.push_back(v);
    l.push_back(it->second == 1 ? Label::illicit : Label::licit);
  }
  if (s.empty()) throw ValidationError("no labeled rows shared by the score and label files");
  auto params = fit_platt(s, l);
  std::vector<real> cal(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) cal[i] = params(s[i]);
  ojson j{{"a", params.a},
          {"b", params.b},
          {"iterations", params.iterations},
          {"gradient_norm", params.gradient_norm},
          {"increasing", params.increasing()},
          {"samples", s.size()},
          {"brier_raw", brier(s, l)},
          {"brier_platt", brier(cal, l)},
          {"ece_raw", ece(s, l)},
          {"ece_platt", ece(cal, l)}};
  emit(g, j, "calibration.json");
  if (!apply_in.empty()) {
    if (apply_out.empty()) throw ValidationError("--apply-to needs --apply-out");
    auto raw = read_id_values(apply_in, false);
    std::ostringstream os;
    os << "id,score\n";
    for (const auto& [id, v] : raw) os << id << ',' << csv::format_double(params(v)) << '\n';
    write_text(apply_out, os.str());
  }
  return 0;
}

void write_queue_csv(const fs::path& p, const Queue& q, const LedgerGraph& graph) {
  std::ostringstream os;
  os << "rank,address,score\n";
  std::size_t rank = 1;
  for (const auto& [a, s] : q.members) os << rank++ << ',' << graph.addr_id(a) << ',' << csv::format_double(s) << '\n';
  write_text(p, os.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"granq: granularity-aware review queues for transaction graphs"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Globals g;
  app.add_option("--config", g.config, "run configuration (TOML)");
  app.add_option("--seed-base", g.seed_base, "override bootstrap seed base");
  app.add_option("--threads", g.threads, "worker threads");
  app.add_option("--out", g.out, "output file or directory");

  auto* ingest = app.add_subcommand("ingest", "load the raw data, report counts and write the binary cache");
  std::string cache_out;
  ingest->add_option("--cache", cache_out, "cache file (defaults to data.cache)");

  auto* synth = app.add_subcommand("synth", "generate a synthetic scenario");
  std::string spec_path;
  synth->add_option("--spec", spec_path, "scenario spec (TOML or JSON)")->required();

  auto* features = app.add_subcommand("features", "export address feature tables");
  std::string feature_kind, level_name = "actor", horizon_mode = "exact";
  Timestep feature_t = 0;
  features->add_option("kind", feature_kind, "path-a | low-info")->required()->check(CLI::IsMember({"path-a", "low-info"}));
  features->add_option("--t", feature_t, "timestep")->required();
  features->add_option("--level", level_name, "low-info level: transaction | actor");
  features->add_option("--horizon", horizon_mode, "exact | cumulative")->check(CLI::IsMember({"exact", "cumulative"}));

  auto* calibrate = app.add_subcommand("calibrate", "fit a Platt calibrator on id,score and id,class files");
  std::string cal_scores, cal_labels, cal_apply, cal_apply_out;
  calibrate->add_option("--scores", cal_scores)->required();
  calibrate->add_option("--labels", cal_labels)->required();
  calibrate->add_option("--apply-to", cal_apply, "raw scores to transform with the fitted map");
  calibrate->add_option("--apply-out", cal_apply_out);

  auto* project = app.add_subcommand("project", "project calibrated transaction scores onto the active set at t");
  Timestep project_t = 0;
  std::string op_name, dir_name;
  project->add_option("--t", project_t)->required();
  project->add_option("--operator", op_name, "noisy_or | max | capped_sum | top_m_mean");
  project->add_option("--direction", dir_name, "input | output | both");

  auto* queue = app.add_subcommand("queue", "build a top-K review queue at t");
  Timestep queue_t = 0;
  std::string source = "tx";
  std::optional<real> budget;
  queue->add_option("--t", queue_t)->required();
  queue->add_option("--source", source)->check(CLI::IsMember({"tx", "actor"}));
  queue->add_option("--budget", budget, "budget fraction");

  auto* eval = app.add_subcommand("eval", "run the evaluation and write eval.json + summary.txt");
  std::string eval_what = "all";
  eval->add_option("what", eval_what, "temporal | static | all")->check(CLI::IsMember({"temporal", "static", "all"}));

  auto* hybrid = app.add_subcommand("hybrid", "tune or evaluate the hybrid policy");
  std::string hybrid_what;
  hybrid->add_option("what", hybrid_what, "tune | eval")->required()->check(CLI::IsMember({"tune", "eval"}));

  auto* ablation = app.add_subcommand("ablation", "feature-regime ablation verdict");
  std::vector<real> jaccards;
  real threshold = 0.80;
  ablation->add_option("--jaccards", jaccards, "per-regime Jaccards (skips the data)")->delimiter(',');
  ablation->add_option("--threshold", threshold);

  auto* diff = app.add_subcommand("report-diff", "compare two eval.json files");
  std::string diff_a, diff_b;
  double tol = 0;
  diff->add_option("a", diff_a)->required();
  diff->add_option("b", diff_b)->required();
  diff->add_option("--tol", tol, "absolute tolerance for numbers");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      auto c = load_config(g);
      auto data = load_dataset(c.data, c.split);
      fs::path cache = cache_out.empty() ? c.cache.value_or(fs::path()) : fs::path(cache_out);
      if (!cache.empty()) save_cache(data, cache);
      emit(g, to_json(data.report), "ingest.json");
    } else if (*synth) {
      if (g.out.empty()) throw ValidationError("synth needs --out <dir>");
      auto spec = ScenarioSpec::from_json(read_spec(spec_path));
      write_scenario(generate(spec), spec, g.out);
      std::cout << "wrote scenario to " << g.out << "\n";
    } else if (*features) {
      auto c = load_config(g);
      auto data = c.cache && fs::exists(*c.cache) ? load_cache(*c.cache) : load_dataset(c.data, c.split);
      const auto& graph = data.graph;
      if (g.out.empty()) throw ValidationError("features needs --out <file.csv>");
      if (feature_kind == "path-a") {
        auto active = active_set(graph, feature_t);
        write_feature_csv(graph, path_a_features(graph, active.members, feature_t), g.out);
      } else {
        const Level level = parse_level(level_name);
        const Horizon h = horizon_mode == "exact" ? Horizon::exact(feature_t) : Horizon::cumulative(feature_t);
        std::optional<int> vc;
        if (c.value_column) {
          const auto& names = graph.tx_feature_names();
          auto it = std::ranges::find(names, *c.value_column);
          if (it == names.end()) throw ValidationError("value_column '" + *c.value_column + "' is not a tx feature");
          vc = static_cast<int>(it - names.begin());
        }
        auto m = low_info_features(graph, level, h, vc);
        std::ostringstream os;
        os << "id,degree,total_value,mean_value,mean_timestep\n";
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
          const auto idx = static_cast<std::size_t>(i);
          os << (level == Level::actor ? graph.addr_id(AddrHandle(idx)) : graph.tx_id(TxHandle(idx)));
          for (Eigen::Index k = 0; k < m.cols(); ++k) os << ',' << csv::format_double(m(i, k));
          os << '\n';
        }
        write_text(g.out, os.str());
      }
    } else if (*calibrate) {
      return run_calibrate(g, cal_scores, cal_labels, cal_apply, cal_apply_out);
    } else if (*project) {
      auto c = load_config(g);
      if (!op_name.empty()) c.primary_operator = parse_operator(op_name);
      if (!dir_name.empty()) c.direction = parse_direction(dir_name);
      auto ctx = prepare(c, {false, false, false, false});
      auto active = active_set(ctx.data.graph, project_t);
      auto p = project_onto(ctx, active.members, Horizon::exact(project_t), c.primary_operator, c.direction);
      if (g.out.empty()) throw ValidationError("project needs --out <file.csv>");
      write_scores(g.out, ctx.data.graph, p.scores);
      std::cerr << "projected " << active.members.size() << " addresses, " << p.zero_filled << " zero-filled\n";
    } else if (*queue) {
      auto c = load_config(g);
      const bool actor = source == "actor";
      auto ctx = prepare(c, {actor, false, false, false});
      const auto& graph = ctx.data.graph;
      auto active = active_set(graph, queue_t);
      const real beta = budget.value_or(c.primary_budget());
      Queue q;
      if (actor) {
        q = top_k(graph, ctx.actor_at(queue_t), active.members, beta);
      } else {
        auto p = project_onto(ctx, active.members, Horizon::exact(queue_t), c.primary_operator, c.direction);
        q = top_k(graph, p.scores, active.members, beta);
      }
      if (!g.out.empty()) write_queue_csv(g.out, q, graph);
      else std::cout << to_json(q, graph, true).dump(2) << "\n";
    } else if (*eval) {
      auto c = load_config(g);
      PipelineBlocks blocks{eval_what != "static", eval_what != "temporal", eval_what == "all", eval_what == "all"};
      auto report = run_pipeline(c, blocks);
      fs::path dir = g.out.empty() ? fs::path("out") : fs::path(g.out);
      fs::create_directories(dir);
      write_text(dir / "eval.json", report.dump(2) + "\n");
      const auto summary = summary_table(report);
      write_text(dir / "summary.txt", summary);
      ojson meta{{"generated_at", now_utc()}, {"software", std::string("granq ") + kVersion}, {"threads", c.threads}};
      write_text(dir / "eval.meta.json", meta.dump(2) + "\n");
      std::cout << summary;
    } else if (*hybrid) {
      auto c = load_config(g);
      if (hybrid_what == "tune") c.hybrid_tune = true;
      auto ctx = prepare(c, {false, false, true, false});
      auto h = hybrid_block(ctx);
      emit(g, hybrid_what == "tune" ? ojson{{"validation", h["validation"]}, {"params", h["params"]}} : h, "hybrid.json");
    } else if (*ablation) {
      if (!jaccards.empty()) {
        emit(g, {{"jaccards", jaccards}, {"threshold", threshold}, {"verdict", to_string(ablation_verdict(jaccards, threshold))}},
             "ablation.json");
      } else {
        auto c = load_config(g);
        auto ctx = prepare(c, {false, false, false, true});
        emit(g, ablation_block(ctx, main_static_jaccard(ctx)), "ablation.json");
      }
    } else if (*diff) {
      auto read = [](const std::string& p) {
        std::ifstream f(p);
        if (!f) throw ValidationError("cannot open " + p);
        return ojson::parse(f);
      };
      auto d = diff_reports(read(diff_a), read(diff_b), tol);
      for (const auto& x : d) std::cout << x.path << ": " << x.a << " != " << x.b << "\n";
      std::cout << d.size() << " difference(s)\n";
      return d.empty() ? 0 : 1;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
