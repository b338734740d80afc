#pragma once

#include <optional>
#include <string>

#include "adaplan/scene.hpp"
#include "adaplan/trajectory.hpp"

namespace adaplan {

constexpr int kBaseTokenCost = 20;

// A tagged text answer. mode reflects a well-formed think block when tags_ok,
// best-effort tag detection otherwise; trajectory is absent whenever the
// answer payload fails to parse. tags_ok is the derived well-formedness flag
// consumed by format_reward.
struct Response {
  std::string raw_text;
  Mode mode = Mode::NonThinking;
  std::optional<std::string> think_content;
  std::optional<Trajectory> trajectory;
  int token_cost = kBaseTokenCost;
  bool tags_ok = false;
};

// Never throws; malformed input is encoded in the Response flags.
Response parse_response(const std::string& raw_text);

// Canonical serialization: "<think>...</think><answer>(x,y); ...</answer>" or
// the answer block alone. Waypoints use shortest-round-trip formatting, so
// parse_response recovers them bit-exactly.
std::string serialize_response(Mode mode, const std::string& think_text, const Trajectory& traj);

std::string format_double(double v);                 // shortest round-trip
std::string format_double_fixed(double v, int prec); // fixed decimals, for think text

}  // namespace adaplan
