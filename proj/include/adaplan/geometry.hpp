#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace adaplan {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Vec2& o) const = default;
  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double norm2() const { return x * x + y * y; }
};

inline Vec2 unit_from_heading(double heading) { return {std::cos(heading), std::sin(heading)}; }
inline Vec2 left_normal(const Vec2& d) { return {-d.y, d.x}; }

struct Pose {
  Vec2 position;
  double heading = 0.0;
};

// Oriented rectangle used for vehicle footprints.
struct Obb {
  Vec2 center;
  double heading = 0.0;
  double half_length = 0.0;
  double half_width = 0.0;

  std::array<Vec2, 4> corners() const {
    Vec2 ax = unit_from_heading(heading);
    Vec2 ay = left_normal(ax);
    Vec2 ex = ax * half_length;
    Vec2 ey = ay * half_width;
    return {center + ex + ey, center + ex - ey, center - ex - ey, center - ex + ey};
  }

  double bounding_radius() const { return std::hypot(half_length, half_width); }
};

// Separating-axis test on the four face normals. Touching rectangles count as
// overlapping (separation requires a strictly positive gap).
inline bool obb_overlap(const Obb& a, const Obb& b) {
  double cd2 = (a.center - b.center).norm2();
  double rr = a.bounding_radius() + b.bounding_radius();
  if (cd2 > rr * rr) return false;

  Vec2 axes[4] = {unit_from_heading(a.heading), left_normal(unit_from_heading(a.heading)),
                  unit_from_heading(b.heading), left_normal(unit_from_heading(b.heading))};
  auto ca = a.corners();
  auto cb = b.corners();
  for (const Vec2& ax : axes) {
    double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
    for (const Vec2& p : ca) {
      double v = p.dot(ax);
      amin = std::min(amin, v);
      amax = std::max(amax, v);
    }
    for (const Vec2& p : cb) {
      double v = p.dot(ax);
      bmin = std::min(bmin, v);
      bmax = std::max(bmax, v);
    }
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

inline double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  Vec2 ab = b - a;
  double len2 = ab.norm2();
  if (len2 <= 0.0) return (p - a).norm();
  double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

inline double dist_point_polyline(const Vec2& p, const std::vector<Vec2>& pts) {
  double best = 1e300;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    best = std::min(best, dist_point_segment(p, pts[i], pts[i + 1]));
  }
  return best;
}

// Proper segment-segment intersection. On hit, tp/tq are the parametric
// positions of the intersection point on [p0,p1] and [q0,q1].
inline bool segment_intersect(const Vec2& p0, const Vec2& p1, const Vec2& q0, const Vec2& q1,
                              double* tp = nullptr, double* tq = nullptr) {
  Vec2 r = p1 - p0;
  Vec2 s = q1 - q0;
  double denom = r.cross(s);
  if (std::abs(denom) < 1e-12) return false;  // parallel or degenerate
  Vec2 d = q0 - p0;
  double t = d.cross(s) / denom;
  double u = d.cross(r) / denom;
  if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return false;
  if (tp) *tp = t;
  if (tq) *tq = u;
  return true;
}

}  // namespace adaplan
