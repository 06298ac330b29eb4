#include "bevdrive/env/environment.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <mutex>

#include "bevdrive/bev/raster.hpp"

namespace bevdrive::env {

namespace {

std::shared_ptr<const world::TownMap> cached_town(uint64_t seed, const world::TownSpec& spec) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<const world::TownMap>> cache;
  char key[256];
  std::snprintf(key, sizeof(key), "%llu|%d|%d|%.6f|%.6f|%d|%.6f|%.3f|%.3f|%.3f|%.3f",
                static_cast<unsigned long long>(seed), spec.grid_rows, spec.grid_cols,
                spec.block_m, spec.lane_width, spec.lanes, spec.junction_fraction, spec.green_s,
                spec.yellow_s, spec.red_s, spec.box_clearance_m);
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[key];
  if (!slot) slot = std::make_shared<world::TownMap>(world::generate_town(seed, spec));
  return slot;
}

const char* bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace

Scenario make_random_scenario(uint64_t scenario_seed, const ScenarioParams& params) {
  Scenario s;
  s.town_seed = scenario_seed / 16 + 1;  // several missions share each town
  s.town_spec = params.town_spec;
  s.traffic_count = params.traffic_count;
  s.pedestrian_count = params.pedestrian_count;
  s.step_limit = params.step_limit;
  s.variant = params.variant;

  const auto town = cached_town(s.town_seed, s.town_spec);
  Rng rng(scenario_seed * 0x9e3779b97f4a7c15ull + 0xb5297a4d3ull);
  const auto& spawns = town->spawn_points;
  const auto& sp = spawns[rng.uniform_int(spawns.size())];
  const world::LaneSegment& lane = town->lane(sp.lane);
  const double s0 = std::min(sp.s, std::max(0.0, lane.length - 5.0));

  std::vector<Vec2> pts;
  pts.push_back(lane.point_at(s0));
  int32_t cur = sp.lane;
  double cs = s0;
  double total = 0.0;
  while (total < params.mission_length_m) {
    double remaining = params.waypoint_spacing_m;
    while (remaining > 0.0) {
      const world::LaneSegment& l = town->lane(cur);
      const double avail = l.length - cs;
      if (avail >= remaining) {
        cs += remaining;
        remaining = 0.0;
      } else {
        remaining -= avail;
        cur = l.successors[rng.uniform_int(l.successors.size())];
        cs = 0.0;
      }
    }
    pts.push_back(town->lane(cur).point_at(cs));
    total += params.waypoint_spacing_m;
  }
  for (const Vec2& p : pts) s.mission.push_back(route::gnss_from_world(p));
  return s;
}

Environment::Environment(const EnvConfig& cfg) : cfg_(cfg), history_(cfg.temporal_stride) {}

const bev::Observation& Environment::reset(const Scenario& scenario, uint64_t seed) {
  scenario_ = scenario;
  seed_ = seed;
  town_ = cached_town(scenario.town_seed, scenario.town_spec);

  world::WorldConfig wcfg;
  wcfg.vehicle = cfg_.vehicle;
  wcfg.dt = cfg_.dt;
  wcfg.traffic_count = scenario.traffic_count;
  wcfg.pedestrian_count = scenario.pedestrian_count;
  wcfg.stop_zone_includes_yellow = cfg_.stop_zone_includes_yellow;
  world_ = std::make_unique<world::World>(town_, wcfg, seed);

  if (scenario.mission.size() < 2) throw std::invalid_argument("mission needs >= 2 waypoints");
  mission_world_.clear();
  for (const auto& g : scenario.mission) mission_world_.push_back(route::world_from_gnss(g));

  const auto snap = world_->index().snap(*town_, mission_world_.front(), 5.0);
  if (!snap) throw std::invalid_argument("mission start is not on the road network");
  world_->populate_at(snap->lane, snap->s);

  route_ = route::plan_shortest_path(
      *town_, world_->index(), {snap->lane, snap->s},
      {mission_world_.begin() + 1, mission_world_.end()});
  initial_route_length_ = route_.length;
  covered_base_ = 0.0;
  progress_on_route_ = 0.0;
  covered_total_ = 0.0;
  next_waypoint_ = 1;
  blocked_anchor_m_ = 0.0;
  blocked_anchor_time_ = 0.0;

  composer_ = std::make_unique<bev::ObservationComposer>(scenario.variant);
  if (scenario.variant == VariantId::PredictedRoute && !predictor_) {
    throw std::runtime_error("PredictedRoute variant requires a route predictor checkpoint");
  }
  env_rng_.reseed(seed * 0x2545f4914f6cdd1dull + 0x9e3779b9ull);
  classifier_ = percep::StopClassifierSim(cfg_.classifier);

  bev::Snapshot snap0 = bev::make_snapshot(*world_);
  snap0.ego_affected_pred = classifier_.simulate(snap0.ego_affected_gt, env_rng_);
  history_.reset(snap0);

  metrics_ = metrics::EpisodeMetrics{};
  episode_return_ = 0.0;
  steps_ = 0;
  done_ = false;

  compose_observation();
  if (log_sink_) {
    log_sink_("{\"type\":\"header\",\"seed\":" + std::to_string(seed_) +
              ",\"scenario\":" + scenario_to_json(scenario_) + "}");
  }
  return obs_;
}

StepResult Environment::step(double steer, double accel) {
  world::Action a;
  a.steer = steer;
  if (accel >= 0.0) {
    a.throttle = accel;
  } else {
    a.brake = -accel;
  }
  return step(a);
}

StepResult Environment::step(const world::Action& action) {
  if (done_) throw std::logic_error("step() after episode end");
  StepResult result;

  const world::World prev = *world_;
  const double prev_covered = covered_total_;
  world_->step(action);
  ++steps_;

  result.infractions = detect_infractions(prev, *world_);

  // Mission progress via monotone projection onto the current route.
  const Vec2 ego_pos = world_->ego().pose.position();
  const auto proj = route_.polyline.project(ego_pos);
  if (proj.dist <= 3.0 && proj.s > progress_on_route_) progress_on_route_ = proj.s;
  covered_total_ = std::max(covered_total_, covered_base_ + progress_on_route_);

  while (next_waypoint_ < mission_world_.size() &&
         (ego_pos - mission_world_[next_waypoint_]).norm() <= cfg_.waypoint_reach_m) {
    ++next_waypoint_;
  }

  // Reward terms.
  const RewardConfig& rw = cfg_.reward;
  const double delta = std::clamp(covered_total_ - prev_covered, 0.0,
                                  cfg_.vehicle.max_speed * cfg_.dt * 1.5);
  double reward = rw.progress_weight * delta;
  reward -= rw.lateral_weight * std::min(std::abs(proj.lateral), 5.0);
  const double heading_ref_s =
      std::min(proj.s + std::max(0.0, rw.heading_lookahead_m), route_.length);
  const double route_heading = route_.polyline.heading_at(heading_ref_s);
  const double heading_err = wrap_angle(world_->ego().pose.heading - route_heading);
  reward -= rw.heading_weight * std::abs(heading_err);
  const bool in_red_zone = world_->ego_in_active_stop_zone();
  const double v = world_->ego().lon_speed;
  double v_target = rw.target_speed;
  if (rw.curve_accel > 0.0) {
    const double span = 6.0;
    const double h0 = route_.polyline.heading_at(std::min(proj.s, route_.length));
    const double h1 = route_.polyline.heading_at(std::min(proj.s + span, route_.length));
    const double curvature = std::abs(wrap_angle(h1 - h0)) / span;
    if (curvature > 1e-4) {
      const double v_curve = std::sqrt(rw.curve_accel / curvature);
      v_target = std::clamp(v_curve, rw.curve_min_speed, rw.target_speed);
    }
  }
  if (in_red_zone) {
    // Waiting at a red is free; moving through it is penalized.
    reward -= rw.speed_weight * v / rw.target_speed;
  } else {
    reward -= rw.speed_weight * std::abs(v - v_target) / rw.target_speed;
  }

  bool collision = false;
  for (const auto& ev : result.infractions) {
    ++metrics_.count(ev.kind);
    switch (ev.kind) {
      case world::InfractionKind::CollisionVehicle:
      case world::InfractionKind::CollisionPedestrian:
      case world::InfractionKind::CollisionStatic:
        reward -= rw.collision_penalty;
        collision = true;
        break;
      case world::InfractionKind::RedLight:
        reward -= rw.red_light_penalty;
        break;
      case world::InfractionKind::OffRoad:
        reward -= rw.offroad_penalty;
        break;
      default:
        break;
    }
  }

  // Termination and re-planning.
  if (collision) {
    done_ = true;
    result.termination = "collision";
  } else if (proj.dist > cfg_.replan_deviation_m) {
    const auto snap = world_->index().snap(*town_, ego_pos, 3.0);
    bool replanned = false;
    if (snap && next_waypoint_ < mission_world_.size()) {
      try {
        replan_from(*snap);
        replanned = true;
      } catch (const route::PlanError&) {
        replanned = false;
      }
    }
    if (!replanned) {
      done_ = true;
      result.termination = "route_deviation";
      result.infractions.push_back({world::InfractionKind::RouteDeviation, world_->time()});
      ++metrics_.count(world::InfractionKind::RouteDeviation);
    }
  }
  if (!done_ && next_waypoint_ >= mission_world_.size() &&
      progress_on_route_ >= route_.length - cfg_.route_complete_margin_m) {
    done_ = true;
    result.termination = "route_complete";
    covered_total_ = initial_route_length_;
  }
  if (!done_ && steps_ >= scenario_.step_limit) {
    done_ = true;
    result.termination = "timeout";
    result.infractions.push_back({world::InfractionKind::Timeout, world_->time()});
    ++metrics_.count(world::InfractionKind::Timeout);
  }
  if (!done_) {
    if (covered_total_ - blocked_anchor_m_ >= cfg_.blocked_min_progress_m) {
      blocked_anchor_m_ = covered_total_;
      blocked_anchor_time_ = world_->time();
    } else if (world_->time() - blocked_anchor_time_ > cfg_.blocked_seconds) {
      done_ = true;
      result.termination = "blocked";
      result.infractions.push_back({world::InfractionKind::Timeout, world_->time()});
      ++metrics_.count(world::InfractionKind::Timeout);
    }
  }

  const double rc = initial_route_length_ > 0
                        ? std::clamp(covered_total_ / initial_route_length_, 0.0, 1.0)
                        : 0.0;

  // Observation-side state advances even on terminal steps so logs and
  // replay stay aligned.
  bev::Snapshot snap_now = bev::make_snapshot(*world_);
  snap_now.ego_affected_pred = classifier_.simulate(snap_now.ego_affected_gt, env_rng_);
  history_.push(std::move(snap_now));
  compose_observation();

  result.reward = reward;
  result.done = done_;
  result.progress_m = covered_total_;
  result.route_completion = rc;
  episode_return_ += reward;

  if (done_) {
    metrics_ = metrics::finalize(rc, metrics_.infraction_counts, cfg_.penalties);
  } else {
    metrics_.route_completion = rc;
  }
  append_step_log(action, result);
  return result;
}

world::Action Environment::scripted_driver_action() const {
  const auto& ego = world_->ego();
  const auto proj = route_.polyline.project(ego.pose.position());
  const double lookahead = std::max(4.0, 0.9 * ego.lon_speed);
  const Vec2 target = route_.polyline.point_at(std::min(proj.s + lookahead, route_.length));
  const Vec2 local = ego.pose.to_local(target);
  const double alpha = std::atan2(local.y, std::max(0.5, local.x));
  const double wheel = std::atan2(2.0 * cfg_.vehicle.wheelbase * std::sin(alpha), lookahead);

  // Curvature ahead limits the comfortable speed.
  const double h_now = route_.polyline.heading_at(proj.s);
  const double h_ahead = route_.polyline.heading_at(std::min(proj.s + 8.0, route_.length));
  const double turn = std::abs(wrap_angle(h_ahead - h_now));
  double v_des = cfg_.reward.target_speed;
  if (turn > 0.3) v_des = std::min(v_des, 3.0);
  if (turn > 0.8) v_des = std::min(v_des, 2.2);

  // Hold at red stop zones ahead on our route.
  for (const auto& tl : world_->lights()) {
    if (!world::light_is_active(tl, true)) continue;
    const Vec2 fwd{std::cos(tl.stop_zone.heading), std::sin(tl.stop_zone.heading)};
    const Vec2 zone_end = tl.stop_zone.center + fwd * tl.stop_zone.half_extents.x;
    const auto zp = route_.polyline.project(zone_end);
    if (zp.dist > 2.5) continue;  // zone not on our route
    const double gap = zp.s - proj.s;
    if (gap > -1.0 && gap < 20.0) {
      if (gap < 5.5) {
        v_des = 0.0;
      } else {
        v_des = std::min(v_des, (gap - 5.5) * 0.7);
      }
    }
  }
  // Keep distance to actors ahead.
  for (size_t i = 1; i < world_->actors().size(); ++i) {
    const auto& other = world_->actors()[i];
    const Vec2 rel = ego.pose.to_local(other.pose.position());
    if (rel.x > 0.0 && rel.x < 14.0 && std::abs(rel.y) < 2.2) {
      const double gap = rel.x - 5.0;
      if (gap < 1.0) {
        v_des = 0.0;
      } else {
        v_des = std::min(v_des, other.lon_speed + (gap - 1.0) * 0.5);
      }
    }
  }

  world::Action act;
  act.steer = std::clamp(wheel / cfg_.vehicle.max_wheel_angle, -1.0, 1.0);
  const double dv = v_des - ego.lon_speed;
  if (dv >= 0.0) {
    act.throttle = std::clamp(dv * 0.7, 0.0, 1.0);
  } else {
    act.brake = std::clamp(-dv * 0.7, 0.0, 1.0);
  }
  return act;
}

void Environment::replan_from(const world::LaneIndex::Snap& snap) {
  route_ = route::plan_shortest_path(
      *town_, world_->index(), {snap.lane, snap.s},
      {mission_world_.begin() + static_cast<long>(next_waypoint_), mission_world_.end()});
  covered_base_ = initial_route_length_ - route_.length;
  progress_on_route_ = 0.0;
}

void Environment::compose_observation() {
  const Pose ego = world_->ego().pose;
  const VariantId variant = scenario_.variant;

  bev::Grid road, lanes;
  bev::Grid route_mask;
  bev::GridF heatmap;
  const bool wants_static = variant != VariantId::NoStatic;
  if (wants_static) {
    bev::render_static_channels(*town_, world_->index(), ego, &road, &lanes);
  }
  if (variant == VariantId::StaticPredicted) {
    const auto proj = route_.polyline.project(ego.position());
    const double deviation = proj.dist;
    auto degraded_road = percep::degrade_to_iou(road, cfg_.road_profile, deviation, env_rng_);
    auto degraded_lanes = percep::degrade_to_iou(lanes, cfg_.lane_profile, deviation, env_rng_);
    road = std::move(degraded_road.mask);
    lanes = std::move(degraded_lanes.mask);
  }

  // Remaining route from the current projection onward.
  std::vector<Vec2> remaining;
  if (variant != VariantId::TargetHeatmap) {
    const size_t start =
        std::min(route_.polyline.pts.empty() ? size_t{0}
                                             : static_cast<size_t>(std::max(0.0, progress_on_route_) / 0.2),
                 route_.polyline.pts.size() > 0 ? route_.polyline.pts.size() - 1 : size_t{0});
    remaining.assign(route_.polyline.pts.begin() + static_cast<long>(start),
                     route_.polyline.pts.end());
  }

  if (variant == VariantId::PredictedRoute) {
    std::vector<Vec2> upcoming(mission_world_.begin() + static_cast<long>(next_waypoint_),
                               mission_world_.end());
    if (upcoming.empty()) upcoming.push_back(mission_world_.back());
    const auto wps = route::WaypointSet::from_remaining(upcoming, ego);
    predictor_->predict_route_grid(road, lanes, wps, cfg_.predicted_route_threshold,
                                   &route_mask);
  } else if (variant != VariantId::TargetHeatmap) {
    route::Route rest;
    rest.polyline.pts = std::move(remaining);
    rest.polyline.rebuild_arclength();
    route::render_route_mask(rest, ego, &route_mask, cfg_.route_render);
  } else {
    const Vec2 next_wp = mission_world_[std::min(next_waypoint_, mission_world_.size() - 1)];
    route::render_target_heatmap(ego.to_local(next_wp), &heatmap, cfg_.route_render);
  }

  bev::ObservationComposer::Inputs in;
  in.road = wants_static ? &road : nullptr;
  in.lane_lines = wants_static ? &lanes : nullptr;
  in.route_mask = variant != VariantId::TargetHeatmap ? &route_mask : nullptr;
  in.heatmap = variant == VariantId::TargetHeatmap ? &heatmap : nullptr;
  in.history = &history_;
  in.lights = &world_->lights();
  in.measurement = bev::make_measurement(world_->ego());
  composer_->compose(in, ego, &obs_);
}

void Environment::append_step_log(const world::Action& action, const StepResult& result) {
  if (!log_sink_) return;
  char buf[640];
  const auto& ego = world_->ego();
  int n = std::snprintf(
      buf, sizeof(buf),
      "{\"type\":\"step\",\"t\":%d,\"time\":%.17g,\"pose\":[%.17g,%.17g,%.17g],"
      "\"speed\":%.17g,\"action\":[%.17g,%.17g,%.17g],\"reward\":%.17g,"
      "\"progress\":%.17g,\"rc\":%.17g,\"variant\":\"%s\",\"done\":%s",
      steps_, world_->time(), ego.pose.x, ego.pose.y, ego.pose.heading, ego.lon_speed,
      action.steer, action.throttle, action.brake, result.reward, result.progress_m,
      result.route_completion, variant_name(scenario_.variant), bool_str(result.done));
  std::string line(buf, static_cast<size_t>(n));
  line += ",\"infractions\":[";
  for (size_t i = 0; i < result.infractions.size(); ++i) {
    line += i ? ",\"" : "\"";
    line += world::infraction_name(result.infractions[i].kind);
    line += "\"";
  }
  line += "]";
  if (result.done) {
    line += ",\"termination\":\"" + result.termination + "\"";
  }
  line += "}";
  log_sink_(line);

  if (result.done) {
    std::snprintf(buf, sizeof(buf),
                  "{\"type\":\"footer\",\"steps\":%d,\"return\":%.17g,\"rc\":%.17g,"
                  "\"is\":%.17g,\"ds\":%.17g,\"counts\":[%d,%d,%d,%d,%d,%d,%d]}",
                  steps_, episode_return_, metrics_.route_completion, metrics_.infraction_score,
                  metrics_.driving_score, metrics_.infraction_counts[0],
                  metrics_.infraction_counts[1], metrics_.infraction_counts[2],
                  metrics_.infraction_counts[3], metrics_.infraction_counts[4],
                  metrics_.infraction_counts[5], metrics_.infraction_counts[6]);
    log_sink_(buf);
  }
}

}  // namespace bevdrive::env
