#include "adaplan/response.hpp"

#include <charconv>
#include <cmath>
#include <cstring>

namespace adaplan {

namespace {

bool whitespace_only(const std::string& s, size_t from, size_t to) {
  for (size_t i = from; i < to && i < s.size(); ++i)
    if (!std::isspace(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

bool parse_number(const std::string& s, size_t* pos, double* out) {
  while (*pos < s.size() && std::isspace(static_cast<unsigned char>(s[*pos]))) ++(*pos);
  auto [p, ec] = std::from_chars(s.data() + *pos, s.data() + s.size(), *out);
  if (ec != std::errc()) return false;
  *pos = static_cast<size_t>(p - s.data());
  return std::isfinite(*out);
}

bool expect(const std::string& s, size_t* pos, char c) {
  while (*pos < s.size() && std::isspace(static_cast<unsigned char>(s[*pos]))) ++(*pos);
  if (*pos >= s.size() || s[*pos] != c) return false;
  ++(*pos);
  return true;
}

// Payload: exactly 8 semicolon- or comma-separated "(x, y)" pairs.
std::optional<Trajectory> parse_payload(const std::string& body) {
  Trajectory traj;
  size_t pos = 0;
  for (int i = 0; i < kNumWaypoints; ++i) {
    if (i > 0) {
      while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
      if (pos < body.size() && (body[pos] == ';' || body[pos] == ',')) ++pos;
      else return std::nullopt;
    }
    double x, y;
    if (!expect(body, &pos, '(')) return std::nullopt;
    if (!parse_number(body, &pos, &x)) return std::nullopt;
    if (!expect(body, &pos, ',')) return std::nullopt;
    if (!parse_number(body, &pos, &y)) return std::nullopt;
    if (!expect(body, &pos, ')')) return std::nullopt;
    if (std::abs(x) > 200.0 || std::abs(y) > 200.0) return std::nullopt;
    traj.waypoints[i] = {x, y};
  }
  if (!whitespace_only(body, pos, body.size())) return std::nullopt;  // wrong arity (extra pairs)
  return traj;
}

size_t count_occurrences(const std::string& s, const char* needle) {
  size_t n = 0, pos = 0, len = std::strlen(needle);
  while ((pos = s.find(needle, pos)) != std::string::npos) {
    ++n;
    pos += len;
  }
  return n;
}

}  // namespace

Response parse_response(const std::string& raw) {
  Response r;
  r.raw_text = raw;

  size_t think_open = raw.find("<think>");
  size_t think_close = raw.find("</think>");
  size_t ans_open = raw.find("<answer>");
  size_t ans_close = raw.find("</answer>");

  bool has_think = think_open != std::string::npos;
  bool ans_ok = ans_open != std::string::npos && ans_close != std::string::npos &&
                ans_open < ans_close &&
                count_occurrences(raw, "<answer>") == 1 && count_occurrences(raw, "</answer>") == 1;
  bool tags_ok = ans_ok;
  if (tags_ok && has_think) {
    tags_ok = think_close != std::string::npos && think_open < think_close &&
              think_close < ans_open &&
              count_occurrences(raw, "<think>") == 1 && count_occurrences(raw, "</think>") == 1 &&
              whitespace_only(raw, 0, think_open) &&
              whitespace_only(raw, think_close + 8, ans_open) &&
              whitespace_only(raw, ans_close + 9, raw.size());
  } else if (tags_ok) {
    tags_ok = think_close == std::string::npos && whitespace_only(raw, 0, ans_open) &&
              whitespace_only(raw, ans_close + 9, raw.size());
  }

  r.mode = has_think ? Mode::Thinking : Mode::NonThinking;
  if (has_think && think_close != std::string::npos && think_open + 7 <= think_close)
    r.think_content = raw.substr(think_open + 7, think_close - (think_open + 7));
  if (ans_ok) r.trajectory = parse_payload(raw.substr(ans_open + 8, ans_close - (ans_open + 8)));
  r.tags_ok = tags_ok;
  r.token_cost = kBaseTokenCost;
  if (r.mode == Mode::Thinking && r.think_content)
    r.token_cost += static_cast<int>(r.think_content->size());
  return r;
}

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

std::string format_double_fixed(double v, int prec) {
  char buf[48];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, prec);
  (void)ec;
  return std::string(buf, p);
}

std::string serialize_response(Mode mode, const std::string& think_text, const Trajectory& traj) {
  std::string out;
  if (mode == Mode::Thinking) {
    out += "<think>";
    out += think_text;
    out += "</think>";
  }
  out += "<answer>";
  for (int i = 0; i < kNumWaypoints; ++i) {
    if (i) out += "; ";
    out += "(";
    out += format_double(traj.waypoints[i].x);
    out += ",";
    out += format_double(traj.waypoints[i].y);
    out += ")";
  }
  out += "</answer>";
  return out;
}

}  // namespace adaplan
