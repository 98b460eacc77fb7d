#pragma once

#include <span>
#include <vector>

#include "granq/error.hpp"
#include "granq/scores.hpp"
#include "granq/types.hpp"

namespace granq {

// Sigmoid calibration map s -> 1 / (1 + exp(a * s + b)).
struct SigmoidParams {
  real a = 0;
  real b = 0;
  int iterations = 0;
  real gradient_norm = 0;

  real operator()(real s) const;
  template <typename Derived>
  VectorXr apply(const Eigen::DenseBase<Derived>& s) const {
    return s.derived().unaryExpr([this](real v) { return (*this)(v); });
  }
  // Positives concentrate at high raw scores.
  bool increasing() const { return a < 0; }
};

class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, SigmoidParams last) : Error(what), last_iterate(last) {}
  SigmoidParams last_iterate;
};

// Platt's method: minimise the logistic NLL against smoothed targets
// (N+ + 1)/(N+ + 2) and 1/(N- + 2) by damped Newton steps. Stops when the
// mean-gradient norm drops below 1e-10; 100 iterations without convergence
// raise CalibrationError carrying the last iterate. Labels must be illicit
// (positive) or licit; unknown entries raise ValidationError.
SigmoidParams fit_platt(std::span<const real> raw_scores, std::span<const Label> labels);

ScoreTable apply_platt(const ScoreTable& raw, const SigmoidParams& params);

// Mean squared error against 1 (illicit) / 0 (licit). Labels as for fit_platt.
real brier(std::span<const real> scores, std::span<const Label> labels);

// Expected calibration error over equal-width bins on [0,1]. Bins are
// right-open except the last, which includes 1.
real ece(std::span<const real> scores, std::span<const Label> labels, int bins = 10);

}  // namespace granq
