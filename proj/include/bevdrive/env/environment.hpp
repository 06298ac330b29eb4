#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "bevdrive/bev/observation.hpp"
#include "bevdrive/metrics/metrics.hpp"
#include "bevdrive/percep/percep.hpp"
#include "bevdrive/route/predictor.hpp"
#include "bevdrive/route/route.hpp"
#include "bevdrive/world/town_gen.hpp"

namespace bevdrive::env {

struct Scenario {
  uint64_t town_seed = 1;
  world::TownSpec town_spec;
  std::vector<route::GnssCoord> mission;  // first fix is the spawn, >= 2 total
  int traffic_count = 4;
  int pedestrian_count = 0;
  int step_limit = 2000;
  VariantId variant = VariantId::Expert;
};

struct ScenarioParams {
  world::TownSpec town_spec;
  double mission_length_m = 180.0;
  double waypoint_spacing_m = 25.0;
  int traffic_count = 4;
  int pedestrian_count = 0;
  int step_limit = 2000;
  VariantId variant = VariantId::Expert;
};

// Deterministic random scenario: town from the seed, spawn + mission
// waypoints along a random successor walk.
Scenario make_random_scenario(uint64_t scenario_seed, const ScenarioParams& params);

struct RewardConfig {
  double progress_weight = 1.0;
  double lateral_weight = 0.5;
  double heading_weight = 0.3;
  double speed_weight = 0.1;
  double target_speed = 6.0;
  double collision_penalty = 10.0;
  double red_light_penalty = 5.0;
  double offroad_penalty = 5.0;
  // Heading error is measured against the route slightly ahead so turns are
  // rewarded before the apex; 0 compares against the nearest route point.
  double heading_lookahead_m = 3.0;
  // When > 0, the speed target drops on curved route sections to
  // sqrt(curve_accel * radius), teaching braking before turns.
  double curve_accel = 2.5;
  double curve_min_speed = 2.0;
};

struct EnvConfig {
  world::VehicleParams vehicle;
  double dt = 0.1;
  RewardConfig reward;
  int temporal_stride = 4;
  route::RouteRenderConfig route_render;
  percep::DegradationProfile road_profile{0.924, 1.0};
  percep::DegradationProfile lane_profile{0.756, 1.0};
  percep::StopClassifierConfig classifier{0.95, 0.02, 0.4, 0};
  bool stop_zone_includes_yellow = false;
  double replan_deviation_m = 3.5;
  double waypoint_reach_m = 5.0;
  double blocked_seconds = 30.0;
  double blocked_min_progress_m = 1.0;
  double route_complete_margin_m = 2.0;
  double predicted_route_threshold = 0.5;
  metrics::PenaltyConfig penalties;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
  std::vector<world::InfractionEvent> infractions;
  double progress_m = 0.0;         // cumulative covered mission distance
  double route_completion = 0.0;   // RC so far
  std::string termination;         // set when done
};

// Step-record sink; used for JSONL episode logs.
using LogSink = std::function<void(const std::string& line)>;

class Environment {
 public:
  explicit Environment(const EnvConfig& cfg = {});

  // Builds the world deterministically from (scenario, seed), plans the
  // mission route, primes history, and composes the first observation.
  const bev::Observation& reset(const Scenario& scenario, uint64_t seed);

  StepResult step(const world::Action& action);
  StepResult step(double steer, double accel);  // accel < 0 brakes

  const bev::Observation& observation() const { return obs_; }
  bool done() const { return done_; }
  const world::World& world() const { return *world_; }
  const metrics::EpisodeMetrics& episode_metrics() const { return metrics_; }
  double episode_return() const { return episode_return_; }
  int episode_steps() const { return steps_; }
  int measurement_dim() const { return composer_->measurement_size(); }
  const Scenario& scenario() const { return scenario_; }

  void set_log_sink(LogSink sink) { log_sink_ = std::move(sink); }
  void set_route_predictor(std::shared_ptr<const route::RoutePredictor> model) {
    predictor_ = std::move(model);
  }

  // Scripted route-following baseline (pure pursuit + red-light/lead-vehicle
  // speed control). Checks that scenarios are completable and anchors tests.
  world::Action scripted_driver_action() const;

  uint64_t world_state_hash() const { return world_->state_hash(); }

 private:
  void compose_observation();
  void replan_from(const world::LaneIndex::Snap& snap);
  void append_step_log(const world::Action& action, const StepResult& result);

  EnvConfig cfg_;
  Scenario scenario_;
  uint64_t seed_ = 0;
  std::shared_ptr<const world::TownMap> town_;
  std::unique_ptr<world::World> world_;
  std::unique_ptr<bev::ObservationComposer> composer_;
  std::shared_ptr<const route::RoutePredictor> predictor_;
  percep::StopClassifierSim classifier_;
  Rng env_rng_;  // observation-side randomness; never touches world state

  route::Route route_;
  std::vector<Vec2> mission_world_;  // mission waypoints in world frame
  size_t next_waypoint_ = 1;
  double initial_route_length_ = 0.0;
  double covered_base_ = 0.0;    // mission distance absorbed by re-plans
  double progress_on_route_ = 0.0;  // monotone projection arclength
  double covered_total_ = 0.0;
  double blocked_anchor_m_ = 0.0;
  double blocked_anchor_time_ = 0.0;

  bev::HistoryBuffer history_;
  bev::Observation obs_;
  metrics::EpisodeMetrics metrics_;
  double episode_return_ = 0.0;
  int steps_ = 0;
  bool done_ = true;
  LogSink log_sink_;
};

// Serializes scenarios for episode-log headers and replay.
std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& json_text);

}  // namespace bevdrive::env
