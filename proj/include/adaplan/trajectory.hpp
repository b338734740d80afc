#pragma once

#include <array>
#include <cmath>

#include "adaplan/geometry.hpp"

namespace adaplan {

constexpr int kNumWaypoints = 8;
constexpr double kTrajDt = 0.5;

// 8 waypoints at 0.5 s over a 4 s horizon, in the ego frame at t=0 (ego at the
// origin, heading +x). Derivatives are finite differences anchored at the
// ego's current state.
struct Trajectory {
  std::array<Vec2, kNumWaypoints> waypoints{};
  double dt = kTrajDt;

  const Vec2& endpoint() const { return waypoints.back(); }
  bool operator==(const Trajectory& o) const { return waypoints == o.waypoints && dt == o.dt; }
};

// Finite-difference kinematics over the 9 knots (origin + 8 waypoints).
// vel[0] is the ego's instantaneous velocity, vel[k>=1] backward differences;
// acc/jerk are successive differences of those.
struct TrajKinematics {
  std::array<Vec2, kNumWaypoints + 1> pos{};
  std::array<Vec2, kNumWaypoints + 1> vel{};
  std::array<Vec2, kNumWaypoints> acc{};
  std::array<double, kNumWaypoints> a_long{};
  std::array<double, kNumWaypoints> a_lat{};
  std::array<double, kNumWaypoints - 1> jerk{};
};

inline TrajKinematics compute_kinematics(const Trajectory& traj, double ego_speed) {
  TrajKinematics k;
  k.pos[0] = {0.0, 0.0};
  for (int i = 0; i < kNumWaypoints; ++i) k.pos[i + 1] = traj.waypoints[i];
  k.vel[0] = {ego_speed, 0.0};
  for (int i = 1; i <= kNumWaypoints; ++i) k.vel[i] = (k.pos[i] - k.pos[i - 1]) * (1.0 / traj.dt);
  for (int i = 0; i < kNumWaypoints; ++i) {
    Vec2 a = (k.vel[i + 1] - k.vel[i]) * (1.0 / traj.dt);
    k.acc[i] = a;
    Vec2 dir = k.vel[i] + k.vel[i + 1];
    double n = dir.norm();
    Vec2 t = n > 1e-9 ? dir * (1.0 / n) : Vec2{1.0, 0.0};
    k.a_long[i] = a.dot(t);
    k.a_lat[i] = a.cross(t) * -1.0;  // left-positive lateral component
  }
  for (int i = 0; i + 1 < kNumWaypoints; ++i)
    k.jerk[i] = ((k.acc[i + 1] - k.acc[i]) * (1.0 / traj.dt)).norm();
  return k;
}

// Piecewise-linear interpolation of the trajectory at time t in [0, 4].
inline Vec2 traj_pos_at(const Trajectory& traj, double t) {
  if (t <= 0.0) return {0.0, 0.0};
  double u = t / traj.dt;
  int seg = static_cast<int>(u);
  if (seg >= kNumWaypoints) return traj.waypoints.back();
  double f = u - seg;
  Vec2 a = seg == 0 ? Vec2{0.0, 0.0} : traj.waypoints[seg - 1];
  Vec2 b = traj.waypoints[seg];
  return a + (b - a) * f;
}

// Velocity of the segment containing t (constant within a segment).
inline Vec2 traj_vel_at(const Trajectory& traj, double t) {
  double u = t / traj.dt;
  int seg = static_cast<int>(u);
  if (seg >= kNumWaypoints) seg = kNumWaypoints - 1;
  if (seg < 0) seg = 0;
  Vec2 a = seg == 0 ? Vec2{0.0, 0.0} : traj.waypoints[seg - 1];
  Vec2 b = traj.waypoints[seg];
  return (b - a) * (1.0 / traj.dt);
}

// Heading along the trajectory: direction of the current segment, holding the
// previous heading through stationary segments (initial heading 0).
inline double traj_heading_at(const Trajectory& traj, double t) {
  double u = t / traj.dt;
  int seg = static_cast<int>(u);
  if (seg >= kNumWaypoints) seg = kNumWaypoints - 1;
  if (seg < 0) seg = 0;
  for (int i = seg; i >= 0; --i) {
    Vec2 a = i == 0 ? Vec2{0.0, 0.0} : traj.waypoints[i - 1];
    Vec2 b = traj.waypoints[i];
    Vec2 d = b - a;
    if (d.norm() > 1e-6) return std::atan2(d.y, d.x);
  }
  return 0.0;
}

inline bool trajectory_finite(const Trajectory& traj) {
  for (const Vec2& w : traj.waypoints)
    if (!std::isfinite(w.x) || !std::isfinite(w.y) || std::abs(w.x) > 200.0 || std::abs(w.y) > 200.0)
      return false;
  return true;
}

}  // namespace adaplan
