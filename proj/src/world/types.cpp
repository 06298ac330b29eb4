#include "bevdrive/world/types.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <unordered_set>

namespace bevdrive::world {

void LaneSegment::rebuild_arclength() {
  cum_s.assign(centerline.size(), 0.0);
  for (size_t i = 1; i < centerline.size(); ++i) {
    cum_s[i] = cum_s[i - 1] + (centerline[i] - centerline[i - 1]).norm();
  }
  length = cum_s.empty() ? 0.0 : cum_s.back();
}

Vec2 LaneSegment::point_at(double s) const {
  Polyline pl;
  pl.pts = centerline;
  pl.cum_s = cum_s;
  return pl.point_at(s);
}

double LaneSegment::heading_at(double s) const {
  Polyline pl;
  pl.pts = centerline;
  pl.cum_s = cum_s;
  return pl.heading_at(s);
}

Polyline::Projection LaneSegment::project(const Vec2& p) const {
  Polyline pl;
  pl.pts = centerline;
  pl.cum_s = cum_s;
  return pl.project(p);
}

std::vector<Vec2> LaneSegment::polygon() const {
  std::vector<Vec2> poly;
  poly.reserve(left_boundary.size() + right_boundary.size());
  poly.insert(poly.end(), left_boundary.begin(), left_boundary.end());
  poly.insert(poly.end(), right_boundary.rbegin(), right_boundary.rend());
  return poly;
}

void TownMap::validate() const {
  for (size_t i = 0; i < lanes.size(); ++i) {
    const LaneSegment& l = lanes[i];
    if (l.id != static_cast<int32_t>(i)) throw std::runtime_error("lane id mismatch");
    if (l.width <= 0.0) throw std::runtime_error("lane width must be > 0");
    if (l.centerline.size() < 2) throw std::runtime_error("lane centerline too short");
    if (l.left_boundary.size() != l.centerline.size() ||
        l.right_boundary.size() != l.centerline.size()) {
      throw std::runtime_error("boundary vertex count != centerline vertex count");
    }
    for (int32_t s : l.successors) {
      if (s < 0 || s >= static_cast<int32_t>(lanes.size()))
        throw std::runtime_error("dangling successor id");
    }
    for (int32_t p : l.predecessors) {
      if (p < 0 || p >= static_cast<int32_t>(lanes.size()))
        throw std::runtime_error("dangling predecessor id");
    }
  }
  for (const TrafficLight& tl : lights) {
    if (tl.green_s <= 0.0 || tl.yellow_s <= 0.0 || tl.red_s <= 0.0)
      throw std::runtime_error("light phase durations must be > 0");
    if (tl.stop_zone.half_extents.x <= 0.0 || tl.stop_zone.half_extents.y <= 0.0)
      throw std::runtime_error("stop zone half extents must be > 0");
  }
  if (spawn_points.empty()) throw std::runtime_error("town has no spawn points");
  for (const SpawnPoint& sp : spawn_points) {
    if (sp.lane < 0 || sp.lane >= static_cast<int32_t>(lanes.size()))
      throw std::runtime_error("spawn point on unknown lane");
  }

  // Reachability: BFS over successor edges from each spawn lane; every lane
  // must be reached from at least one spawn point.
  std::unordered_set<int32_t> reached;
  for (const SpawnPoint& sp : spawn_points) {
    std::vector<int32_t> stack = {sp.lane};
    while (!stack.empty()) {
      const int32_t id = stack.back();
      stack.pop_back();
      if (!reached.insert(id).second) continue;
      for (int32_t s : lanes[static_cast<size_t>(id)].successors) stack.push_back(s);
    }
  }
  if (reached.size() != lanes.size())
    throw std::runtime_error("some lanes unreachable from every spawn point");
}

void TownMap::bounding_box(Vec2* lo, Vec2* hi) const {
  const double inf = std::numeric_limits<double>::max();
  *lo = {inf, inf};
  *hi = {-inf, -inf};
  auto grow = [&](const Vec2& p) {
    lo->x = std::min(lo->x, p.x);
    lo->y = std::min(lo->y, p.y);
    hi->x = std::max(hi->x, p.x);
    hi->y = std::max(hi->y, p.y);
  };
  for (const LaneSegment& l : lanes) {
    for (const Vec2& p : l.left_boundary) grow(p);
    for (const Vec2& p : l.right_boundary) grow(p);
  }
  for (const Junction& j : junctions) {
    for (const Vec2& p : j.box) grow(p);
  }
}

const char* infraction_name(InfractionKind k) {
  switch (k) {
    case InfractionKind::CollisionVehicle: return "collision_vehicle";
    case InfractionKind::CollisionPedestrian: return "collision_pedestrian";
    case InfractionKind::CollisionStatic: return "collision_static";
    case InfractionKind::RedLight: return "red_light";
    case InfractionKind::OffRoad: return "off_road";
    case InfractionKind::RouteDeviation: return "route_deviation";
    case InfractionKind::Timeout: return "timeout";
  }
  return "unknown";
}

}  // namespace bevdrive::world
