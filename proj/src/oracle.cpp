#include "granq/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "granq/error.hpp"

namespace granq::oracle {

namespace {

void check_size(std::size_t n) {
  if (n > kOracleLimit) throw ValidationError("oracle instance exceeds " + std::to_string(kOracleLimit) + " elements");
}

}  // namespace

double noisy_or(const std::vector<double>& s) {
  check_size(s.size());
  double miss = 1.0;
  for (double v : s) miss = miss * (1.0 - v);
  return 1.0 - miss;
}

double max_score(const std::vector<double>& s) {
  check_size(s.size());
  double best = 0.0;
  for (double v : s) {
    if (v > best) best = v;
  }
  return best;
}

double capped_sum(const std::vector<double>& s, double n_cap) {
  check_size(s.size());
  double total = 0.0;
  for (double v : s) total = total + v;
  double r = total / n_cap;
  if (r > 1.0) r = 1.0;
  return r;
}

double top_m_mean(const std::vector<double>& s, int m) {
  check_size(s.size());
  std::vector<double> v = s;
  std::sort(v.begin(), v.end());
  std::reverse(v.begin(), v.end());
  std::size_t take = v.size() < static_cast<std::size_t>(m) ? v.size() : static_cast<std::size_t>(m);
  if (take == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < take; ++i) total = total + v[i];
  return total / static_cast<double>(take);
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  check_size(a.size());
  check_size(b.size());
  std::set<std::string> both;
  std::set<std::string> either = a;
  for (const auto& x : b) {
    either.insert(x);
    if (a.count(x)) both.insert(x);
  }
  if (either.empty()) return 1.0;
  return static_cast<double>(both.size()) / static_cast<double>(either.size());
}

double rbo(const std::vector<std::string>& l1, const std::vector<std::string>& l2, double p) {
  check_size(l1.size());
  check_size(l2.size());
  if (!(p > 0 && p < 1)) throw ValidationError("oracle rbo: p outside (0,1)");
  std::size_t d = l1.size() > l2.size() ? l1.size() : l2.size();
  if (d == 0) return 1.0;
  double series = 0.0;
  double overlap_d = 0.0;
  for (std::size_t i = 1; i <= d; ++i) {
    std::set<std::string> p1, p2;
    for (std::size_t j = 0; j < i && j < l1.size(); ++j) p1.insert(l1[j]);
    for (std::size_t j = 0; j < i && j < l2.size(); ++j) p2.insert(l2[j]);
    double overlap = 0.0;
    for (const auto& x : p1) {
      if (p2.count(x)) overlap = overlap + 1.0;
    }
    series = series + (overlap / static_cast<double>(i)) * std::pow(p, static_cast<double>(i));
    if (i == d) overlap_d = overlap;
  }
  return (overlap_d / static_cast<double>(d)) * std::pow(p, static_cast<double>(d)) + ((1.0 - p) / p) * series;
}

std::set<std::string> top_k(const std::map<std::string, double>& scores, std::size_t k) {
  check_size(scores.size());
  std::set<std::string> out;
  if (k == 0 || scores.empty()) return out;
  std::vector<double> values;
  for (const auto& [id, s] : scores) values.push_back(s);
  std::sort(values.begin(), values.end());
  if (k > values.size()) k = values.size();
  double boundary = values[values.size() - k];
  for (const auto& [id, s] : scores) {
    if (s >= boundary) out.insert(id);
  }
  return out;
}

Burden burden(const std::vector<int>& member_classes, int total_illicit) {
  check_size(member_classes.size());
  Burden b;
  int ill = 0, lic = 0, unk = 0;
  for (int c : member_classes) {
    if (c == 1) ill++;
    else if (c == 2) lic++;
    else unk++;
  }
  double n = static_cast<double>(member_classes.size());
  if (n > 0) {
    b.illicit_per_100 = 100.0 * ill / n;
    b.licit_per_100 = 100.0 * lic / n;
    b.unknown_per_100 = 100.0 * unk / n;
  }
  if (ill > 0) b.reviews_per_tp = n / ill;
  if (total_illicit > 0) b.yield = static_cast<double>(ill) / total_illicit;
  return b;
}

std::optional<double> novel_positive_rate(const std::set<std::string>& illicit_now,
                                          const std::vector<std::set<std::string>>& earlier) {
  check_size(illicit_now.size());
  if (illicit_now.empty()) return std::nullopt;
  int novel = 0;
  for (const auto& x : illicit_now) {
    bool seen = false;
    for (const auto& s : earlier) {
      if (s.count(x)) seen = true;
    }
    if (!seen) novel++;
  }
  return static_cast<double>(novel) / static_cast<double>(illicit_now.size());
}

std::pair<double, double> percentile_ci(const std::vector<double>& samples, double level) {
  check_size(samples.size());
  if (samples.size() < 2) throw ValidationError("oracle percentile: need two samples");
  std::vector<double> x = samples;
  std::sort(x.begin(), x.end());
  auto q = [&](double prob) {
    double h = (static_cast<double>(x.size()) - 1.0) * prob + 1.0;
    double fl = std::floor(h);
    std::size_t lo = static_cast<std::size_t>(fl);
    if (lo >= x.size()) return x.back();
    return x[lo - 1] + (h - fl) * (x[lo] - x[lo - 1]);
  };
  double alpha = (100.0 - level) / 200.0;
  return {q(alpha), q(1.0 - alpha)};
}

double metric(std::string_view name, const nlohmann::json& in) {
  auto vec = [&](const char* key) { return in.at(key).get<std::vector<double>>(); };
  auto strs = [&](const char* key) { return in.at(key).get<std::vector<std::string>>(); };
  if (name == "noisy_or") return noisy_or(vec("scores"));
  if (name == "max" || name == "max_score") return max_score(vec("scores"));
  if (name == "capped_sum") return capped_sum(vec("scores"), in.value("n_cap", 1.0));
  if (name == "top_m_mean") return top_m_mean(vec("scores"), in.value("m", 5));
  if (name == "jaccard") {
    auto a = strs("a"), b = strs("b");
    return jaccard({a.begin(), a.end()}, {b.begin(), b.end()});
  }
  if (name == "rbo") return rbo(strs("l1"), strs("l2"), in.value("p", 0.9));
  if (name == "novel_positive_rate") {
    auto now = strs("now");
    std::vector<std::set<std::string>> earlier;
    for (const auto& e : in.at("earlier")) {
      auto v = e.get<std::vector<std::string>>();
      earlier.emplace_back(v.begin(), v.end());
    }
    auto r = novel_positive_rate({now.begin(), now.end()}, earlier);
    if (!r) throw ValidationError("oracle novel_positive_rate undefined: no illicit at t");
    return *r;
  }
  if (name == "percentile_low") return percentile_ci(vec("samples"), in.value("level", 95.0)).first;
  if (name == "percentile_high") return percentile_ci(vec("samples"), in.value("level", 95.0)).second;
  if (name == "illicit_per_100") {
    return burden(in.at("classes").get<std::vector<int>>(), in.value("total_illicit", 0)).illicit_per_100;
  }
  throw ValidationError("unknown oracle metric '" + std::string(name) + "'");
}

}  // namespace granq::oracle
