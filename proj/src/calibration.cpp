#include "granq/calibration.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace granq {

real SigmoidParams::operator()(real s) const {
  const real z = a * s + b;
  // Split on sign so exp never overflows.
  if (z >= 0) {
    const real e = std::exp(-z);
    return e / (1 + e);
  }
  return 1 / (1 + std::exp(z));
}

namespace {

void check_inputs(std::span<const real> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
  if (scores.empty()) throw ValidationError("empty score/label input");
  if (std::ranges::find(labels, Label::unknown) != labels.end()) {
    throw ValidationError("calibration inputs must be labeled illicit or licit");
  }
}

// Mean NLL of targets under p = 1/(1+exp(f)), f = a*s + b, written stably.
real objective(std::span<const real> s, const VectorXr& target, real a, real b) {
  real sum = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const real f = a * s[i] + b;
    const real t = target[static_cast<Eigen::Index>(i)];
    // -[t log p + (1-t) log(1-p)] = t f + log(1 + exp(-f)) when f >= 0
    sum += f >= 0 ? t * f + std::log1p(std::exp(-f)) : (t - 1) * f + std::log1p(std::exp(f));
  }
  return sum / static_cast<real>(s.size());
}

}  // namespace

SigmoidParams fit_platt(std::span<const real> raw_scores, std::span<const Label> labels) {
  check_inputs(raw_scores, labels);
  const auto n = raw_scores.size();
  const auto n_pos = static_cast<std::size_t>(std::ranges::count(labels, Label::illicit));
  const auto n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ValidationError("Platt calibration needs both classes present");

  const real hi = (static_cast<real>(n_pos) + 1) / (static_cast<real>(n_pos) + 2);
  const real lo = 1 / (static_cast<real>(n_neg) + 2);
  VectorXr target(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) target[static_cast<Eigen::Index>(i)] = labels[i] == Label::illicit ? hi : lo;

  SigmoidParams p;
  p.a = 0;
  p.b = std::log((static_cast<real>(n_neg) + 1) / (static_cast<real>(n_pos) + 1));
  real value = objective(raw_scores, target, p.a, p.b);

  constexpr int kMaxIter = 100;
  constexpr real kTol = 1e-10;
  const real inv_n = 1 / static_cast<real>(n);
  for (int iter = 0; iter <= kMaxIter; ++iter) {
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const real s = raw_scores[i];
      const real prob = p(s);
      // d/df of the NLL is (t - p); chain rule through f = a s + b.
      const real d = target[static_cast<Eigen::Index>(i)] - prob;
      const real w = prob * (1 - prob);
      grad += d * Eigen::Vector2d(s, 1);
      hess += w * Eigen::Vector2d(s, 1) * Eigen::RowVector2d(s, 1);
    }
    grad *= inv_n;
    hess *= inv_n;
    p.iterations = iter;
    p.gradient_norm = grad.norm();
    if (p.gradient_norm < kTol) return p;
    if (iter == kMaxIter) break;

    hess.diagonal().array() += 1e-12;
    const Eigen::Vector2d step = hess.ldlt().solve(-grad);
    // Near the optimum the objective change falls below rounding and Armijo
    // cannot see it; the pure Newton step is reliable there.
    if (p.gradient_norm < 1e-6) {
      p.a += step[0];
      p.b += step[1];
      value = objective(raw_scores, target, p.a, p.b);
      continue;
    }
    real scale = 1;
    bool moved = false;
    while (scale >= 1e-10) {
      const real na = p.a + scale * step[0];
      const real nb = p.b + scale * step[1];
      const real nv = objective(raw_scores, target, na, nb);
      if (nv <= value + 1e-4 * scale * grad.dot(step)) {
        p.a = na;
        p.b = nb;
        value = nv;
        moved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!moved) break;
  }
  throw CalibrationError("Platt fit did not converge (gradient norm " + std::to_string(p.gradient_norm) + ")", p);
}

ScoreTable apply_platt(const ScoreTable& raw, const SigmoidParams& params) {
  ScoreTable out = raw;
  out.stage = Stage::platt;
  out.values = raw.values.unaryExpr([&](real v) { return std::isnan(v) ? v : params(v); });
  return out;
}

real brier(std::span<const real> scores, std::span<const Label> labels) {
  check_inputs(scores, labels);
  real sum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const real e = scores[i] - (labels[i] == Label::illicit ? 1.0 : 0.0);
    sum += e * e;
  }
  return sum / static_cast<real>(scores.size());
}

real ece(std::span<const real> scores, std::span<const Label> labels, int bins) {
  check_inputs(scores, labels);
  if (bins < 1) throw ValidationError("ECE needs at least one bin");
  std::vector<real> conf(static_cast<std::size_t>(bins), 0), pos(static_cast<std::size_t>(bins), 0),
      count(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto b = static_cast<int>(std::floor(scores[i] * bins));
    b = std::clamp(b, 0, bins - 1);
    conf[static_cast<std::size_t>(b)] += scores[i];
    pos[static_cast<std::size_t>(b)] += labels[i] == Label::illicit ? 1 : 0;
    count[static_cast<std::size_t>(b)] += 1;
  }
  real total = 0;
  const real n = static_cast<real>(scores.size());
  for (std::size_t b = 0; b < conf.size(); ++b) {
    if (count[b] == 0) continue;
    total += (count[b] / n) * std::abs(pos[b] / count[b] - conf[b] / count[b]);
  }
  return total;
}

}  // namespace granq
