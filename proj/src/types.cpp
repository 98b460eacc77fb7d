#include "granq/types.hpp"

#include <string>

#include "granq/error.hpp"

namespace granq {

std::string_view to_string(Level level) {
  return level == Level::transaction ? "transaction" : "actor";
}

std::string_view to_string(Stage stage) { return stage == Stage::raw ? "raw" : "platt"; }

std::string_view to_string(Direction direction) {
  switch (direction) {
    case Direction::input: return "input";
    case Direction::output: return "output";
    case Direction::both: return "both";
  }
  return "both";
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::illicit: return "illicit";
    case Label::licit: return "licit";
    case Label::unknown: return "unknown";
  }
  return "unknown";
}

Level parse_level(std::string_view s) {
  if (s == "transaction" || s == "tx") return Level::transaction;
  if (s == "actor" || s == "addr" || s == "address") return Level::actor;
  throw ValidationError("unknown level '" + std::string(s) + "'");
}

Stage parse_stage(std::string_view s) {
  if (s == "raw") return Stage::raw;
  if (s == "platt") return Stage::platt;
  throw ValidationError("unknown score stage '" + std::string(s) + "'");
}

Direction parse_direction(std::string_view s) {
  if (s == "input") return Direction::input;
  if (s == "output") return Direction::output;
  if (s == "both") return Direction::both;
  throw ValidationError("unknown direction '" + std::string(s) + "'");
}

}  // namespace granq
