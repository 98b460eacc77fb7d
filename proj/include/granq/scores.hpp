#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "granq/types.hpp"

namespace granq {

// Scores in [0,1] for the nodes of one level, indexed by handle. Nodes
// without a score hold NaN.
struct ScoreTable {
  Level level = Level::transaction;
  Stage stage = Stage::raw;
  std::string regime = "main";
  VectorXr values;

  static ScoreTable empty(Level level, Stage stage, std::string regime, std::size_t n) {
    ScoreTable t{level, stage, std::move(regime), VectorXr::Constant(static_cast<Eigen::Index>(n),
                                                                      std::numeric_limits<real>::quiet_NaN())};
    return t;
  }

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  bool has(std::size_t i) const { return i < size() && !std::isnan(values[static_cast<Eigen::Index>(i)]); }
  real operator[](std::size_t i) const { return values[static_cast<Eigen::Index>(i)]; }
  void set(std::size_t i, real v) { values[static_cast<Eigen::Index>(i)] = v; }
  std::size_t covered() const { return static_cast<std::size_t>((values.array() == values.array()).count()); }
};

}  // namespace granq
