#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "bevdrive/rng.hpp"
#include "bevdrive/world/types.hpp"

namespace bevdrive::world {

// Kinematic bicycle parameters shared by all cars.
struct VehicleParams {
  double wheelbase = 2.5;
  double max_speed = 10.0;
  double throttle_accel = 3.0;
  double brake_decel = 8.0;
  double max_wheel_angle = 35.0 * M_PI / 180.0;
  // Steering actuator slew limit in normalized units/s; full sweep -1 -> +1
  // takes 2 / rate seconds. <= 0 disables the limit.
  double max_steer_rate = 3.0;
};

struct Action {
  double steer = 0.0;     // [-1, 1]
  double throttle = 0.0;  // [0, 1]
  double brake = 0.0;     // [0, 1]
};

// Forward-Euler kinematic bicycle step. Out-of-range inputs are clamped with
// a rate-limited warning; pose integrates with the pre-update speed.
ActorState step_dynamics(const ActorState& state, const Action& action, double dt,
                         const VehicleParams& params = {});

// Grid-bucket index answering "which lanes/junctions are near this point".
class LaneIndex {
 public:
  LaneIndex() = default;
  explicit LaneIndex(const TownMap& town);

  // Lane ids whose bounding box intersects the disc (p, radius).
  std::vector<int32_t> lanes_near(const Vec2& p, double radius) const;
  // Junction indexes whose box bbox contains the query disc.
  std::vector<int32_t> junctions_near(const Vec2& p, double radius) const;

  bool on_road(const TownMap& town, const Vec2& p) const;

  struct Snap {
    int32_t lane = -1;
    double s = 0.0;
    double lateral = 0.0;
    double dist = 0.0;
  };
  // Closest lane (by centerline distance), within max_dist. Street lanes are
  // preferred over junction connectors at equal distance.
  std::optional<Snap> snap(const TownMap& town, const Vec2& p, double max_dist) const;

 private:
  struct Cell {
    std::vector<int32_t> lanes;
    std::vector<int32_t> junctions;
  };
  Vec2 origin_;
  double cell_ = 12.0;
  int nx_ = 0, ny_ = 0;
  std::vector<Cell> cells_;
  std::vector<std::pair<Vec2, Vec2>> lane_bbox_;
  std::vector<std::pair<Vec2, Vec2>> junction_bbox_;

  template <typename Fn>
  void visit_cells(const Vec2& p, double radius, Fn&& fn) const;
};

// Scripted lane-following state for one background vehicle.
struct TrafficAgentState {
  int32_t lane = -1;
  double target_speed = 5.0;
};

struct PedestrianAgentState {
  int32_t lane = -1;       // lane whose outer boundary the walker follows
  double s = 0.0;          // arclength along that boundary
  int dir = 1;             // walk direction along the boundary
  bool crossing = false;
  Vec2 cross_target;
};

struct WorldConfig {
  VehicleParams vehicle;
  double dt = 0.1;  // 10 Hz
  int traffic_count = 0;
  int pedestrian_count = 0;
  bool stop_zone_includes_yellow = false;
};

// One simulation instance: ego + scripted traffic + lights. Single-threaded;
// run several instances in parallel with distinct seeds for vectorized rollouts.
class World {
 public:
  World(std::shared_ptr<const TownMap> town, const WorldConfig& config, uint64_t seed);

  // Places the ego at a spawn and populates background traffic. Deterministic
  // in the construction seed.
  void populate(int ego_spawn_index);
  void populate_at(int32_t ego_lane, double ego_s);

  void step(const Action& ego_action);

  const TownMap& town() const { return *town_; }
  std::shared_ptr<const TownMap> town_ptr() const { return town_; }
  const LaneIndex& index() const { return *index_; }
  const WorldConfig& config() const { return config_; }
  double time() const { return time_; }

  const ActorState& ego() const { return actors_[0]; }
  ActorState& ego() { return actors_[0]; }
  const std::vector<ActorState>& actors() const { return actors_; }
  std::vector<ActorState>& actors_mut() { return actors_; }
  const std::vector<TrafficLight>& lights() const { return lights_; }
  std::vector<TrafficLight>& lights() { return lights_; }

  // True iff the ego center is inside the stop zone of a light whose phase
  // counts as active (red by default; yellow included per config flag).
  bool ego_in_active_stop_zone() const;

  // Byte-stable snapshot of the mutable state; hash it for determinism checks.
  std::vector<uint8_t> serialize_state() const;
  uint64_t state_hash() const;

 private:
  void step_traffic();
  void step_pedestrians();

  std::shared_ptr<const TownMap> town_;
  std::shared_ptr<const LaneIndex> index_;  // shared so copies stay cheap
  WorldConfig config_;
  Rng rng_;
  double time_ = 0.0;
  std::vector<ActorState> actors_;  // 0 = ego
  std::vector<TrafficLight> lights_;
  std::vector<TrafficAgentState> traffic_;       // parallel to actors_[1..]
  std::vector<PedestrianAgentState> pedestrians_;
};

// Advances all light clocks by dt; phase order green -> yellow -> red -> green.
void tick_traffic_lights(std::vector<TrafficLight>& lights, double dt);

bool light_is_active(const TrafficLight& light, bool include_yellow);

// Step-to-step infraction scan: collisions (footprint overlap), red-light
// crossings (far stop-zone edge crossed while red), and off-road (ego center
// outside every lane/junction polygon). At most one event per kind per step.
std::vector<InfractionEvent> detect_infractions(const World& prev, const World& cur);

}  // namespace bevdrive::world
