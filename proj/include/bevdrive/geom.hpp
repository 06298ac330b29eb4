#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace bevdrive {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::sqrt(x * x + y * y); }
  double norm2() const { return x * x + y * y; }
  Vec2 normalized() const {
    const double n = norm();
    return n > 0 ? Vec2{x / n, y / n} : Vec2{0, 0};
  }
  Vec2 rotated(double rad) const {
    const double c = std::cos(rad), s = std::sin(rad);
    return {c * x - s * y, s * x + c * y};
  }
  Vec2 perp() const { return {-y, x}; }  // 90 deg counter-clockwise
};

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad, world frame, x-axis = 0

  Vec2 position() const { return {x, y}; }
  Vec2 forward() const { return {std::cos(heading), std::sin(heading)}; }
  Vec2 left() const { return {-std::sin(heading), std::cos(heading)}; }

  // World point -> this frame (x forward, y left).
  Vec2 to_local(const Vec2& world) const {
    const Vec2 d = world - position();
    return {d.dot(forward()), d.dot(left())};
  }
  Vec2 to_world(const Vec2& local) const {
    return position() + forward() * local.x + left() * local.y;
  }
};

inline double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

// Oriented rectangle, used for vehicle footprints and stop zones.
struct Obb {
  Vec2 center;
  double heading = 0.0;
  Vec2 half_extents;  // x along heading, y across

  bool contains(const Vec2& p) const {
    const Vec2 d = p - center;
    const Vec2 fwd{std::cos(heading), std::sin(heading)};
    const Vec2 left{-fwd.y, fwd.x};
    return std::abs(d.dot(fwd)) <= half_extents.x + 1e-12 &&
           std::abs(d.dot(left)) <= half_extents.y + 1e-12;
  }

  // Corners in counter-clockwise order.
  void corners(Vec2 out[4]) const {
    const Vec2 fwd{std::cos(heading), std::sin(heading)};
    const Vec2 left{-fwd.y, fwd.x};
    const Vec2 ex = fwd * half_extents.x;
    const Vec2 ey = left * half_extents.y;
    out[0] = center + ex + ey;
    out[1] = center - ex + ey;
    out[2] = center - ex - ey;
    out[3] = center + ex - ey;
  }
};

bool obb_overlap(const Obb& a, const Obb& b);

// Even-odd point-in-polygon with a half-open edge rule so points exactly on
// shared edges land in exactly one of two adjacent polygons.
bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly);

struct Polyline {
  std::vector<Vec2> pts;
  std::vector<double> cum_s;  // cumulative arclength, cum_s[0] = 0

  void rebuild_arclength();
  double length() const { return cum_s.empty() ? 0.0 : cum_s.back(); }
  Vec2 point_at(double s) const;
  double heading_at(double s) const;

  // Closest-point projection: returns arclength s and signed lateral offset
  // (positive = left of travel direction).
  struct Projection {
    double s = 0.0;
    double lateral = 0.0;
    double dist = 0.0;
  };
  Projection project(const Vec2& p) const;
};

// Uniform resampling at the given spacing; keeps the final point.
Polyline resample_polyline(const std::vector<Vec2>& pts, double spacing);

}  // namespace bevdrive
