#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adaplan/geometry.hpp"

namespace adaplan {

enum class Mode { Thinking = 0, NonThinking = 1 };
enum class NavCommand { MoveForward = 0, TurnLeft = 1, TurnRight = 2 };
enum class ComplexityLevel { Level1 = 1, Level2 = 2, Level3 = 3 };
enum class LaneAssignment { EgoLane = 0, AdjacentLane = 1, Crossing = 2 };
enum class MotionModel { FollowLane = 0, ConstantVelocity = 1 };

// Level 1 is the simple tag (D-); Levels 2-3 are challenging (D+).
inline bool is_challenging(ComplexityLevel level) { return level != ComplexityLevel::Level1; }

struct EgoState {
  Vec2 position{0.0, 0.0};
  double heading = 0.0;
  double speed = 0.0;
  double acceleration = 0.0;
};

struct HistoryFrame {
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
  double t = 0.0;
};

// Exactly 3 past ego poses at 0.5 s spacing, timestamps strictly increasing.
struct History {
  std::array<HistoryFrame, 3> frames{};
};

struct Agent {
  int id = 0;
  double length = 4.5;
  double width = 2.0;
  Pose pose;
  Vec2 velocity{0.0, 0.0};
  LaneAssignment lane = LaneAssignment::EgoLane;

  // Motion over the horizon. FollowLane tracks the corridor arc at fixed
  // lateral offset and constant speed; ConstantVelocity extrapolates the
  // t=0 velocity. future_track is rebuilt from these via build_future_tracks.
  MotionModel model = MotionModel::ConstantVelocity;
  double s0 = 0.0;
  double lat_offset = 0.0;
  double speed = 0.0;

  std::vector<Pose> future_track;  // one pose per sim_dt step, t=0 included

  Obb footprint_at(const Pose& p) const {
    return Obb{p.position, p.heading, length * 0.5, width * 0.5};
  }
};

// Single constant-curvature lane. The analytic arc (kappa, s range) is the
// source of truth; the centerline polyline is sampled from it at
// centerline_step for serialization and polyline-based consumers.
struct LaneCorridor {
  double kappa = 0.0;
  double s_min = 0.0;
  double s_max = 0.0;
  double half_width = 0.0;
  std::vector<Vec2> centerline;

  Vec2 arc_point(double s) const {
    if (std::abs(kappa) < 1e-12) return {s, 0.0};
    return {std::sin(kappa * s) / kappa, (1.0 - std::cos(kappa * s)) / kappa};
  }
  double arc_heading(double s) const { return kappa * s; }
  Vec2 arc_tangent(double s) const { return unit_from_heading(kappa * s); }
  Vec2 arc_normal(double s) const { return left_normal(arc_tangent(s)); }

  // Project a point to (arc length, signed lateral offset), left positive.
  void project(const Vec2& p, double* s, double* lat) const {
    if (std::abs(kappa) < 1e-12) {
      *s = p.x;
      *lat = p.y;
      return;
    }
    Vec2 c{0.0, 1.0 / kappa};
    Vec2 u{kappa * (p.x - c.x), kappa * (p.y - c.y)};
    double r = (p - c).norm();
    *s = std::atan2(u.x, -u.y) / kappa;
    *lat = kappa > 0.0 ? 1.0 / kappa - r : r + 1.0 / kappa;
  }

  Vec2 offset_point(double s, double lat) const { return arc_point(s) + arc_normal(s) * lat; }

  std::vector<Vec2> boundary(bool left) const {
    std::vector<Vec2> out;
    out.reserve(centerline.size());
    double step = centerline.size() > 1 ? (s_max - s_min) / (centerline.size() - 1) : 0.0;
    for (size_t i = 0; i < centerline.size(); ++i)
      out.push_back(offset_point(s_min + step * i, left ? half_width : -half_width));
    return out;
  }
};

struct Scene {
  EgoState ego;
  NavCommand command = NavCommand::MoveForward;
  History history;
  std::vector<Agent> agents;
  LaneCorridor corridor;
  std::uint64_t seed = 0;
  ComplexityLevel complexity = ComplexityLevel::Level1;

  const Agent* agent_by_id(int id) const {
    for (const Agent& a : agents)
      if (a.id == id) return &a;
    return nullptr;
  }
};

struct CriticalObjects {
  std::optional<int> cipo1;
  std::vector<int> cipo2;
  std::vector<int> motion_interaction;
  bool boundary_proximity = false;
  double boundary_min_dist = 0.0;  // footprint-side clearance to nearest boundary

  // derived kinematics cached for features and think-text templating
  double cipo1_s = 0.0;
  double cipo1_dv = 0.0;       // lead tangential speed minus ego speed
  double cipo2_s_min = 0.0;    // nearest merge candidate, arc distance
  double mi_earliest_t = 0.0;  // earliest ego arrival time at a crossing

  bool any_agent() const { return cipo1.has_value() || !cipo2.empty() || !motion_interaction.empty(); }
};

const char* to_string(NavCommand c);
const char* to_string(ComplexityLevel l);
const char* to_string(LaneAssignment l);
const char* to_string(MotionModel m);
NavCommand nav_command_from_string(const std::string& s);
ComplexityLevel level_from_int(int v);

}  // namespace adaplan
