#pragma once

#include <vector>

#include "bevdrive/bev/grid.hpp"
#include "bevdrive/world/world.hpp"

namespace bevdrive::bev {

// A cell is filled iff its center lies inside the polygon (even-odd,
// half-open toward the lower column index on exact edge hits).
void fill_polygon(Grid* grid, const std::vector<GridCoord>& poly);

void fill_polygon_world(Grid* grid, const Pose& ego, const std::vector<Vec2>& poly);

void fill_obb_world(Grid* grid, const Pose& ego, const Obb& box);

// Stamps a (2*half_width+1)^2 box at every cell the polyline passes through.
// dash_on/dash_off are arclengths in meters; dash_off = 0 draws solid.
void stroke_polyline_world(Grid* grid, const Pose& ego, const std::vector<Vec2>& pts,
                           int half_width_cells, double dash_on_m = 0.0,
                           double dash_off_m = 0.0);

// Road occupancy and lane-line channels from the town around the ego.
void render_static_channels(const world::TownMap& town, const world::LaneIndex& index,
                            const Pose& ego, Grid* road, Grid* lane_lines);

// One remembered world state; dynamic channels re-render past snapshots into
// the current ego frame.
struct ActorSnap {
  Pose pose;
  Vec2 half_extents;
  world::ActorKind kind;
};

struct Snapshot {
  std::vector<ActorSnap> actors;
  std::vector<uint8_t> light_red;  // per light id
  bool ego_affected_gt = false;    // ego inside an active stop zone
  bool ego_affected_pred = false;  // simulated classifier output
  bool valid = false;
};

Snapshot make_snapshot(const world::World& w);

class HistoryBuffer {
 public:
  explicit HistoryBuffer(int stride = 4) : stride_(stride) {}

  void reset(const Snapshot& initial);
  void push(Snapshot snap);
  // Snapshot slot * stride steps in the past; invalid snapshot when absent.
  const Snapshot& slot(int slot_index) const;
  int stride() const { return stride_; }

 private:
  int stride_;
  std::vector<Snapshot> ring_;
  size_t head_ = 0;   // index of the newest entry
  size_t count_ = 0;  // valid entries
};

// Renders the 12 dynamic channels: vehicles x4, pedestrians x4, stop zones x4
// (newest first within each block). Actors are drawn at their snapshot poses
// in the *current* ego frame; the ego itself is never drawn. A stop zone is
// drawn iff its light was red at that snapshot; zone geometry comes from the
// lights argument.
void render_dynamic_channels(const HistoryBuffer& history,
                             const std::vector<world::TrafficLight>& lights, const Pose& ego,
                             std::array<Grid, 12>* out);

uint64_t grid_hash(const Grid& g, uint64_t h = 0xcbf29ce484222325ull);

}  // namespace bevdrive::bev
