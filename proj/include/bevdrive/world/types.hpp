#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bevdrive/geom.hpp"

namespace bevdrive::world {

enum class BoundaryKind : uint8_t { Solid = 0, Dashed = 1, None = 2 };

struct LaneSegment {
  int32_t id = -1;
  std::vector<Vec2> centerline;  // world meters
  double width = 3.5;
  std::vector<int32_t> successors;
  std::vector<int32_t> predecessors;
  std::vector<Vec2> left_boundary;   // same vertex count as centerline
  std::vector<Vec2> right_boundary;
  BoundaryKind left_kind = BoundaryKind::Solid;
  BoundaryKind right_kind = BoundaryKind::Solid;
  int32_t junction_id = -1;  // -1 when not part of a junction

  // Derived (rebuilt after load, not serialized).
  std::vector<double> cum_s;
  double length = 0.0;

  void rebuild_arclength();
  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  Polyline::Projection project(const Vec2& p) const;
  std::vector<Vec2> polygon() const;  // left boundary + reversed right
};

enum class LightPhase : uint8_t { Green = 0, Yellow = 1, Red = 2 };

struct TrafficLight {
  int32_t id = -1;
  Obb stop_zone;
  double green_s = 8.0;
  double yellow_s = 2.0;
  double red_s = 10.0;
  double clock = 0.0;  // seconds into the cycle, [0, cycle)
  int32_t conflict_group = 0;
  int32_t junction_id = -1;
  int32_t controlled_lane = -1;

  double cycle() const { return green_s + yellow_s + red_s; }
  LightPhase phase() const {
    if (clock < green_s) return LightPhase::Green;
    if (clock < green_s + yellow_s) return LightPhase::Yellow;
    return LightPhase::Red;
  }
  double time_in_phase() const {
    if (clock < green_s) return clock;
    if (clock < green_s + yellow_s) return clock - green_s;
    return clock - green_s - yellow_s;
  }
};

struct Junction {
  int32_t id = -1;
  std::vector<Vec2> box;  // drivable junction area polygon
  std::vector<int32_t> lanes;  // connector lanes grouped under this junction
};

struct SpawnPoint {
  int32_t lane = -1;
  double s = 0.0;
};

struct TownMap {
  std::vector<LaneSegment> lanes;  // index == id
  std::vector<Junction> junctions;
  std::vector<TrafficLight> lights;
  std::vector<SpawnPoint> spawn_points;

  const LaneSegment& lane(int32_t id) const { return lanes[static_cast<size_t>(id)]; }

  // Throws std::runtime_error on the first violated invariant.
  void validate() const;

  void bounding_box(Vec2* lo, Vec2* hi) const;
};

enum class ActorKind : uint8_t { Ego = 0, Vehicle = 1, Pedestrian = 2 };

struct ActorState {
  Pose pose;
  double lon_speed = 0.0;  // m/s, along heading
  double lat_speed = 0.0;
  double steer = 0.0;      // [-1, 1]
  double throttle = 0.0;   // [0, 1]
  double brake = 0.0;      // [0, 1]
  int32_t gear = 1;
  Vec2 half_extents{2.2, 0.9};
  ActorKind kind = ActorKind::Vehicle;

  Obb footprint() const { return Obb{{pose.x, pose.y}, pose.heading, half_extents}; }
};

enum class InfractionKind : uint8_t {
  CollisionVehicle = 0,
  CollisionPedestrian = 1,
  CollisionStatic = 2,
  RedLight = 3,
  OffRoad = 4,
  RouteDeviation = 5,
  Timeout = 6,
};

const char* infraction_name(InfractionKind k);

struct InfractionEvent {
  InfractionKind kind;
  double time = 0.0;
};

}  // namespace bevdrive::world
