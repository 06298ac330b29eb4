#include "bevdrive/world/world.hpp"

#include <algorithm>
#include <cmath>

#include "bevdrive/serial.hpp"

namespace bevdrive::world {

void tick_traffic_lights(std::vector<TrafficLight>& lights, double dt) {
  for (TrafficLight& l : lights) {
    l.clock = std::fmod(l.clock + dt, l.cycle());
  }
}

bool light_is_active(const TrafficLight& light, bool include_yellow) {
  const LightPhase p = light.phase();
  return p == LightPhase::Red || (include_yellow && p == LightPhase::Yellow);
}

World::World(std::shared_ptr<const TownMap> town, const WorldConfig& config, uint64_t seed)
    : town_(std::move(town)),
      index_(std::make_shared<LaneIndex>(*town_)),
      config_(config),
      rng_(seed) {
  lights_ = town_->lights;
  actors_.resize(1);
  actors_[0].kind = ActorKind::Ego;
}

void World::populate(int ego_spawn_index) {
  const auto& spawns = town_->spawn_points;
  const SpawnPoint ego_sp = spawns[static_cast<size_t>(ego_spawn_index) % spawns.size()];
  populate_at(ego_sp.lane, ego_sp.s);
}

void World::populate_at(int32_t ego_lane_id, double ego_s) {
  const auto& spawns = town_->spawn_points;
  const LaneSegment& ego_lane = town_->lane(ego_lane_id);
  actors_.assign(1, ActorState{});
  ActorState& ego = actors_[0];
  ego.kind = ActorKind::Ego;
  const Vec2 p = ego_lane.point_at(ego_s);
  ego.pose = {p.x, p.y, ego_lane.heading_at(ego_s)};
  ego.half_extents = {2.2, 0.9};

  traffic_.clear();
  pedestrians_.clear();

  // Background vehicles on spawn points away from the ego.
  std::vector<int> order(spawns.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  for (size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng_.uniform_int(i)]);
  }
  int placed = 0;
  for (int idx : order) {
    if (placed >= config_.traffic_count) break;
    const SpawnPoint& sp = spawns[static_cast<size_t>(idx)];
    const LaneSegment& lane = town_->lane(sp.lane);
    const Vec2 q = lane.point_at(sp.s);
    if ((q - p).norm() < 15.0) continue;
    bool clash = false;
    for (size_t a = 1; a < actors_.size(); ++a) {
      if ((actors_[a].pose.position() - q).norm() < 8.0) clash = true;
    }
    if (clash) continue;
    ActorState car;
    car.kind = ActorKind::Vehicle;
    car.pose = {q.x, q.y, lane.heading_at(sp.s)};
    car.half_extents = {2.2, 0.9};
    car.lon_speed = 0.0;
    actors_.push_back(car);
    TrafficAgentState agent;
    agent.lane = sp.lane;
    agent.target_speed = rng_.uniform(3.5, 6.0);
    traffic_.push_back(agent);
    ++placed;
  }

  // Pedestrians walk along lane outer boundaries offset to the sidewalk.
  for (int i = 0; i < config_.pedestrian_count; ++i) {
    const SpawnPoint& sp = spawns[rng_.uniform_int(spawns.size())];
    PedestrianAgentState ped;
    ped.lane = sp.lane;
    ped.s = rng_.uniform(0.0, town_->lane(sp.lane).length);
    ped.dir = rng_.bernoulli(0.5) ? 1 : -1;
    pedestrians_.push_back(ped);
    ActorState walker;
    walker.kind = ActorKind::Pedestrian;
    walker.half_extents = {0.35, 0.35};
    const LaneSegment& lane = town_->lane(ped.lane);
    const Vec2 q = lane.point_at(ped.s);
    const Vec2 side = Vec2{std::cos(lane.heading_at(ped.s)), std::sin(lane.heading_at(ped.s))}
                          .perp() * (lane.width * 0.5 + 1.2);
    walker.pose = {q.x + side.x, q.y + side.y, lane.heading_at(ped.s)};
    actors_.push_back(walker);
  }
}

void World::step(const Action& ego_action) {
  actors_[0] = step_dynamics(actors_[0], ego_action, config_.dt, config_.vehicle);
  step_traffic();
  step_pedestrians();
  tick_traffic_lights(lights_, config_.dt);
  time_ += config_.dt;
}

void World::step_traffic() {
  for (size_t t = 0; t < traffic_.size(); ++t) {
    ActorState& car = actors_[1 + t];
    TrafficAgentState& agent = traffic_[t];
    const LaneSegment* lane = &town_->lane(agent.lane);
    auto proj = lane->project(car.pose.position());

    // Advance to the successor once the lane end is reached.
    if (proj.s >= lane->length - 0.5 && !lane->successors.empty()) {
      const int32_t next = lane->successors[rng_.uniform_int(lane->successors.size())];
      agent.lane = next;
      lane = &town_->lane(next);
      proj = lane->project(car.pose.position());
    }

    // Pure pursuit on the lane centerline.
    const double lookahead = std::max(3.0, 0.8 * car.lon_speed);
    Vec2 target;
    if (proj.s + lookahead <= lane->length) {
      target = lane->point_at(proj.s + lookahead);
    } else if (!lane->successors.empty()) {
      // Deterministic preview: first successor (the per-step lane switch
      // above still randomizes the actual choice when several exist).
      const LaneSegment& nxt = town_->lane(lane->successors.front());
      target = nxt.point_at(std::min(proj.s + lookahead - lane->length, nxt.length));
    } else {
      target = lane->point_at(lane->length);
    }
    const Vec2 local = car.pose.to_local(target);
    const double alpha = std::atan2(local.y, std::max(0.5, local.x));
    const double wheel = std::atan2(2.0 * config_.vehicle.wheelbase * std::sin(alpha), lookahead);
    Action act;
    act.steer = std::clamp(wheel / config_.vehicle.max_wheel_angle, -1.0, 1.0);

    // Speed target: obey red lights and keep distance to the actor ahead.
    double v_des = agent.target_speed;
    for (const TrafficLight& tl : lights_) {
      if (tl.controlled_lane != agent.lane) continue;
      if (!light_is_active(tl, true)) continue;
      const Vec2 zone_end = tl.stop_zone.center +
                            Vec2{std::cos(tl.stop_zone.heading), std::sin(tl.stop_zone.heading)} *
                                tl.stop_zone.half_extents.x;
      const auto zp = lane->project(zone_end);
      const double gap = zp.s - proj.s;
      if (gap > -1.0 && gap < 18.0) {
        if (gap < 6.0) {
          v_des = 0.0;
        } else {
          v_des = std::min(v_des, (gap - 6.0) * 0.6);
        }
      }
    }
    for (size_t a = 0; a < actors_.size(); ++a) {
      if (a == 1 + t) continue;
      const ActorState& other = actors_[a];
      const Vec2 rel = car.pose.to_local(other.pose.position());
      if (rel.x > 0.0 && rel.x < 12.0 && std::abs(rel.y) < 2.0) {
        const double gap = rel.x - 4.5;
        if (gap < 1.0) {
          v_des = 0.0;
        } else {
          v_des = std::min(v_des, other.lon_speed + (gap - 1.0) * 0.5);
        }
      }
    }

    const double dv = v_des - car.lon_speed;
    if (dv >= 0.0) {
      act.throttle = std::clamp(dv * 0.8, 0.0, 1.0);
    } else {
      act.brake = std::clamp(-dv * 0.8, 0.0, 1.0);
    }
    car = step_dynamics(car, act, config_.dt, config_.vehicle);
  }
}

void World::step_pedestrians() {
  const size_t base = 1 + traffic_.size();
  const double walk_speed = 1.2;
  for (size_t i = 0; i < pedestrians_.size(); ++i) {
    ActorState& walker = actors_[base + i];
    PedestrianAgentState& ped = pedestrians_[i];
    const LaneSegment& lane = town_->lane(ped.lane);

    if (!ped.crossing && rng_.bernoulli(0.002)) {
      // Start crossing to the opposite sidewalk.
      const Vec2 q = lane.point_at(ped.s);
      const Vec2 side = Vec2{std::cos(lane.heading_at(ped.s)), std::sin(lane.heading_at(ped.s))}
                            .perp();
      const Vec2 here = walker.pose.position();
      const double side_sign = (here - q).dot(side) >= 0 ? -1.0 : 1.0;
      ped.crossing = true;
      ped.cross_target = q + side * (side_sign * (lane.width * 0.5 + 1.2));
    }

    Vec2 target;
    if (ped.crossing) {
      target = ped.cross_target;
      if ((walker.pose.position() - target).norm() < 0.4) ped.crossing = false;
    } else {
      ped.s += ped.dir * walk_speed * config_.dt;
      if (ped.s >= lane.length) {
        if (!lane.successors.empty()) {
          ped.lane = lane.successors[rng_.uniform_int(lane.successors.size())];
          ped.s = 0.0;
        } else {
          ped.dir = -1;
          ped.s = lane.length;
        }
      } else if (ped.s < 0.0) {
        ped.dir = 1;
        ped.s = 0.0;
      }
      const LaneSegment& cur = town_->lane(ped.lane);
      const double s = std::clamp(ped.s, 0.0, cur.length);
      const Vec2 q = cur.point_at(s);
      const Vec2 side =
          Vec2{std::cos(cur.heading_at(s)), std::sin(cur.heading_at(s))}.perp() *
          (cur.width * 0.5 + 1.2);
      target = q + side;
    }

    const Vec2 d = target - walker.pose.position();
    const double dist = d.norm();
    if (dist > 1e-6) {
      const double stepm = std::min(dist, walk_speed * config_.dt);
      walker.pose.x += d.x / dist * stepm;
      walker.pose.y += d.y / dist * stepm;
      walker.pose.heading = std::atan2(d.y, d.x);
      walker.lon_speed = stepm / config_.dt;
    } else {
      walker.lon_speed = 0.0;
    }
  }
}

bool World::ego_in_active_stop_zone() const {
  const Vec2 p = actors_[0].pose.position();
  for (const TrafficLight& tl : lights_) {
    if (light_is_active(tl, config_.stop_zone_includes_yellow) && tl.stop_zone.contains(p)) {
      return true;
    }
  }
  return false;
}

std::vector<uint8_t> World::serialize_state() const {
  BinWriter w;
  w.f64(time_);
  w.u32(static_cast<uint32_t>(actors_.size()));
  for (const ActorState& a : actors_) {
    w.f64(a.pose.x);
    w.f64(a.pose.y);
    w.f64(a.pose.heading);
    w.f64(a.lon_speed);
    w.f64(a.lat_speed);
    w.f64(a.steer);
    w.f64(a.throttle);
    w.f64(a.brake);
    w.i32(a.gear);
    w.u8(static_cast<uint8_t>(a.kind));
  }
  w.u32(static_cast<uint32_t>(lights_.size()));
  for (const TrafficLight& l : lights_) w.f64(l.clock);
  return w.data();
}

uint64_t World::state_hash() const {
  const auto bytes = serialize_state();
  return fnv1a64(bytes.data(), bytes.size());
}

std::vector<InfractionEvent> detect_infractions(const World& prev, const World& cur) {
  std::vector<InfractionEvent> events;
  const double t = cur.time();
  const ActorState& ego = cur.ego();
  const Obb ego_box = ego.footprint();

  bool hit_vehicle = false, hit_pedestrian = false;
  for (size_t i = 1; i < cur.actors().size(); ++i) {
    const ActorState& other = cur.actors()[i];
    if (!obb_overlap(ego_box, other.footprint())) continue;
    if (other.kind == ActorKind::Vehicle) hit_vehicle = true;
    if (other.kind == ActorKind::Pedestrian) hit_pedestrian = true;
  }
  if (hit_vehicle) events.push_back({InfractionKind::CollisionVehicle, t});
  if (hit_pedestrian) events.push_back({InfractionKind::CollisionPedestrian, t});

  // Red-light: ego center crosses the far (junction-side) edge of a red
  // zone between the two states.
  const Vec2 p_prev = prev.ego().pose.position();
  const Vec2 p_cur = ego.pose.position();
  bool ran_red = false;
  for (const TrafficLight& tl : cur.lights()) {
    if (tl.phase() != LightPhase::Red) continue;
    const Vec2 fwd{std::cos(tl.stop_zone.heading), std::sin(tl.stop_zone.heading)};
    const Vec2 far_center = tl.stop_zone.center + fwd * tl.stop_zone.half_extents.x;
    const double e_prev = (p_prev - far_center).dot(fwd);
    const double e_cur = (p_cur - far_center).dot(fwd);
    if (e_prev <= 0.0 && e_cur > 0.0) {
      const Vec2 left{-fwd.y, fwd.x};
      if (std::abs((p_cur - far_center).dot(left)) <= tl.stop_zone.half_extents.y + 0.5) {
        ran_red = true;
      }
    }
  }
  if (ran_red) events.push_back({InfractionKind::RedLight, t});

  // Off-road fires on the transition out of the drivable union, not on every
  // step spent outside it.
  if (!cur.index().on_road(cur.town(), p_cur) && prev.index().on_road(prev.town(), p_prev)) {
    events.push_back({InfractionKind::OffRoad, t});
  }
  return events;
}

}  // namespace bevdrive::world
