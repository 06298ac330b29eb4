#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "bevdrive/bev/grid.hpp"
#include "bevdrive/world/world.hpp"

namespace bevdrive::route {

struct GnssCoord {
  double longitude = 0.0;  // deg, [-180, 180]
  double latitude = 0.0;   // deg, [-90, 90]
  double altitude = 0.0;   // m, ignored by the planar conversion
};

constexpr double kEarthRadiusM = 6371000.0;

// Geographic anchor of the town's local frame (local (0,0) sits here).
constexpr double kAnchorLatitudeDeg = 49.0;
constexpr double kAnchorLongitudeDeg = 8.0;

// Equirectangular projection around the ego; returns the target in the ego
// frame (x forward, y left). Altitude is ignored.
Vec2 gnss_to_local(const GnssCoord& target, const GnssCoord& ego_gnss, double ego_heading);

// Exact inverse of gnss_to_local for the same ego fix.
GnssCoord local_to_gnss(const Vec2& local, const GnssCoord& ego_gnss, double ego_heading);

// World-frame <-> GNSS via the fixed town anchor (heading 0 east frame).
GnssCoord gnss_from_world(const Vec2& world);
Vec2 world_from_gnss(const GnssCoord& gnss);

struct LaneSpan {
  int32_t lane = -1;
  double entry_s = 0.0;
  double exit_s = 0.0;
};

struct Route {
  std::vector<LaneSpan> lane_path;
  Polyline polyline;  // densified at 0.2 m
  double length = 0.0;
};

struct PlanError : std::runtime_error {
  explicit PlanError(int index)
      : std::runtime_error("waypoint " + std::to_string(index) + " unreachable"),
        unreachable_index(index) {}
  int unreachable_index;
};

struct LanePosition {
  int32_t lane = -1;
  double s = 0.0;
};

// Dijkstra over the lane graph (edge weight = lane arclength), visiting the
// waypoints' lanes in order; ties break toward the lower lane id. Waypoints
// must snap to a lane within 5 m. Throws PlanError on the first unreachable
// waypoint.
Route plan_shortest_path(const world::TownMap& town, const world::LaneIndex& index,
                         const LanePosition& start, const std::vector<Vec2>& waypoints);

// Exhaustive-path oracle for small graphs; mirrors the planner's contract.
// Returns nullopt when no path exists. Intended for <= 10-lane test graphs.
std::optional<double> shortest_path_bruteforce(const world::TownMap& town,
                                               const LanePosition& start, int32_t goal_lane,
                                               double goal_s);

struct RouteRenderConfig {
  double stroke_width_m = 0.6;     // 3 cells
  double heatmap_sigma_m = 2.0;    // 10 cells
};

// Desired-route BEV channel: the polyline ahead of the ego stroked 3 cells
// wide, clipped to the grid.
void render_route_mask(const Route& route, const Pose& ego, bev::Grid* out,
                       const RouteRenderConfig& cfg = {});

// Gaussian bump centered at the next waypoint (ego-local meters); peak 1.0.
// Out-of-grid waypoints clamp onto the nearest boundary cell.
void render_target_heatmap(const Vec2& next_wp_local, bev::GridF* out,
                           const RouteRenderConfig& cfg = {});

// Next five mission waypoints as ego-local vectors, padded by repetition.
struct WaypointSet {
  std::array<Vec2, 5> points{};

  static WaypointSet from_remaining(const std::vector<Vec2>& remaining_world, const Pose& ego);
};

}  // namespace bevdrive::route
