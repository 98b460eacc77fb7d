#include "granq/report.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace granq {

using ojson = nlohmann::ordered_json;

namespace {

std::string escape_key(const std::string& k) {
  std::string out;
  for (char c : k) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

void walk(const ojson& a, const ojson& b, const std::string& path, double tol, std::vector<ReportDifference>& out) {
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    if (x == y || std::fabs(x - y) <= tol) return;
    out.push_back({path, a.dump(), b.dump()});
    return;
  }
  if (a.is_object() && b.is_object()) {
    std::set<std::string> seen;
    for (const auto& [k, v] : a.items()) {
      seen.insert(k);
      const auto p = path + "/" + escape_key(k);
      if (b.contains(k)) walk(v, b.at(k), p, tol, out);
      else out.push_back({p, v.dump(), "<missing>"});
    }
    for (const auto& [k, v] : b.items()) {
      if (!seen.count(k)) out.push_back({path + "/" + escape_key(k), "<missing>", v.dump()});
    }
    return;
  }
  if (a.is_array() && b.is_array()) {
    const std::size_t n = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = path + "/" + std::to_string(i);
      if (i >= a.size()) out.push_back({p, "<missing>", b[i].dump()});
      else if (i >= b.size()) out.push_back({p, a[i].dump(), "<missing>"});
      else walk(a[i], b[i], p, tol, out);
    }
    return;
  }
  if (a != b) out.push_back({path, a.dump(), b.dump()});
}

std::string num(const ojson& v, int digits = 4) {
  if (v.is_null()) return "n/a";
  if (!v.is_number()) return v.dump();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v.get<double>());
  return buf;
}

std::string ci(const ojson& r) {
  std::string s = num(r.at("point"));
  const auto& c = r.at("ci");
  s += "  [" + num(c.at("low")) + ", " + num(c.at("high")) + "]";
  if (!c.at("brackets_point").get<bool>()) s += "  (interval misses point)";
  return s;
}

void row(std::ostringstream& os, const std::string& label, const std::string& value) {
  os << "  " << label;
  for (std::size_t i = label.size(); i < 34; ++i) os << ' ';
  os << value << '\n';
}

}  // namespace

std::vector<ReportDifference> diff_reports(const ojson& a, const ojson& b, double tolerance) {
  std::vector<ReportDifference> out;
  walk(a, b, "", tolerance, out);
  return out;
}

std::string summary_table(const ojson& r) {
  std::ostringstream os;
  if (r.contains("calibration")) {
    os << "calibration\n";
    for (const char* lvl : {"tx", "actor"}) {
      const auto& f = r["calibration"][lvl];
      if (f.is_null()) continue;
      row(os, std::string(lvl) + " brier raw -> platt", num(f["brier_raw"]) + " -> " + num(f["brier_platt"]) +
                                                             (f["brier_gate_passed"].get<bool>() ? "" : "  (above gate)") +
                                                             (f.value("applied", true) ? "" : "  (decreasing fit, not applied)"));
      row(os, std::string(lvl) + " ece raw -> platt", num(f["ece_raw"]) + " -> " + num(f["ece_platt"]));
    }
  }
  if (r.contains("temporal")) {
    os << "temporal (per-timestep active sets)\n";
    for (const auto& b : r["temporal"]["budgets"]) {
      const auto& m = b["means"];
      os << " budget " << num(b["budget"], 3) << ", " << b["rows"].size() << " timesteps\n";
      row(os, "mean jaccard (arith / k-weighted)", num(m["jaccard"]["arithmetic"]) + " / " + num(m["jaccard"]["k_weighted"]));
      row(os, "mean rbo", num(m["rbo"]["arithmetic"]));
      row(os, "illicit per 100, tx", num(m["tx_illicit_per_100"]["arithmetic"], 2));
      row(os, "illicit per 100, actor", num(m["actor_illicit_per_100"]["arithmetic"], 2));
      row(os, "fragmentation", num(m["fragmentation"]["arithmetic"]));
    }
  }
  if (r.contains("static")) {
    const auto& s = r["static"];
    os << "static test split (" << s["universe_size"].get<std::size_t>() << " addresses)\n";
    for (const auto& b : s["budgets"]) {
      os << " budget " << num(b["budget"], 3) << ", K = " << b["nominal_k"].get<std::size_t>() << '\n';
      row(os, "jaccard", num(b["jaccard"]));
      row(os, "rbo", num(b["rbo"]));
      row(os, "illicit per 100, tx", num(b["tx"]["illicit_per_100"], 2));
      row(os, "illicit per 100, actor", num(b["actor"]["illicit_per_100"], 2));
    }
    const auto& bs = s["bootstrap"];
    os << " bootstrap at budget " << num(bs["budget"], 3) << '\n';
    for (const auto& [k, v] : bs.items()) {
      if (k != "budget") row(os, k, ci(v));
    }
  }
  if (r.contains("hybrid")) {
    const auto& h = r["hybrid"];
    os << "hybrid (alpha " << num(h["params"]["alpha"], 2) << ", delta " << num(h["params"]["delta"], 2) << ")\n";
    row(os, "mean hybrid yield", num(h["temporal"]["mean_hybrid_yield"]));
    row(os, "mean best single yield", num(h["temporal"]["mean_best_single"]));
    row(os, "mean improvement", ci(h["temporal"]["mean_improvement"]));
  }
  if (r.contains("ablation")) {
    const auto& a = r["ablation"];
    os << "ablation\n";
    for (const auto& g : a["regimes"]) row(os, "jaccard " + g["name"].get<std::string>(), num(g["jaccard"]));
    row(os, "verdict", a["verdict"].is_null() ? "n/a" : a["verdict"].get<std::string>());
  }
  return os.str();
}

}  // namespace granq
