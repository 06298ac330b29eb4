#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bevdrive/bev/observation.hpp"
#include "bevdrive/world/town_gen.hpp"

using namespace bevdrive;
using namespace bevdrive::bev;

namespace {

std::shared_ptr<world::TownMap> make_town(uint64_t seed = 11) {
  world::TownSpec spec;
  spec.grid_rows = 2;
  spec.grid_cols = 2;
  spec.block_m = 56.0;
  spec.junction_fraction = 1.0;
  return std::make_shared<world::TownMap>(world::generate_town(seed, spec));
}

world::World make_world(std::shared_ptr<world::TownMap> town, int traffic = 0, int peds = 0) {
  world::WorldConfig cfg;
  cfg.traffic_count = traffic;
  cfg.pedestrian_count = peds;
  world::World w(std::move(town), cfg, 7);
  w.populate(0);
  return w;
}

Grid dilate(const Grid& g) {
  Grid out;
  for (int r = 0; r < kGridSize; ++r) {
    for (int c = 0; c < kGridSize; ++c) {
      if (!g.at(r, c)) continue;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= kGridSize || cc < 0 || cc >= kGridSize) continue;
          out.set(rr, cc);
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("world_to_grid anchor examples") {
  const Pose ego{100.0, 50.0, 0.6};

  auto cell = world_to_grid(ego, ego.position());
  REQUIRE(cell.has_value());
  CHECK(cell->row == kEgoRow);
  CHECK(cell->col == kEgoCol);

  const Vec2 ahead = ego.position() + ego.forward() * kAheadM;
  cell = world_to_grid(ego, ahead);
  REQUIRE(cell.has_value());
  CHECK(cell->row == 0);
  CHECK(cell->col == 96);

  // 19.2 m to the right: u = 192, exclusive upper bound.
  const Vec2 right = ego.position() - ego.left() * kLateralHalfM;
  CHECK(!world_to_grid(ego, right).has_value());

  // Just inside on the left edge.
  const Vec2 left = ego.position() + ego.left() * kLateralHalfM;
  cell = world_to_grid(ego, left);
  REQUIRE(cell.has_value());
  CHECK(cell->col == 0);
}

TEST_CASE("static channels: ego cell on road, lane band width") {
  // Synthetic straight lane 4 m wide through the ego heading +x.
  world::TownMap town;
  world::LaneSegment lane;
  lane.id = 0;
  lane.width = 4.0;
  lane.centerline = {{-50, 0}, {0, 0}, {120, 0}};
  lane.left_boundary = {{-50, 2}, {0, 2}, {120, 2}};
  lane.right_boundary = {{-50, -2}, {0, -2}, {120, -2}};
  lane.rebuild_arclength();
  town.lanes.push_back(lane);
  town.spawn_points.push_back({0, 10.0});
  world::LaneIndex index(town);

  const Pose ego{0, 0, 0};
  Grid road, lines;
  render_static_channels(town, index, ego, &road, &lines);

  CHECK(road.at(kEgoRow, kEgoCol) == 1);
  // A row well ahead: exactly 20 columns filled (4 m / 0.2 m).
  int filled = 0;
  int lo = kGridSize, hi = -1;
  for (int c = 0; c < kGridSize; ++c) {
    if (road.at(40, c)) {
      ++filled;
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
  }
  CHECK(filled == 20);
  CHECK(lo == 86);
  CHECK(hi == 105);

  // Empty map renders empty channels.
  world::TownMap empty_town;
  world::LaneSegment far_lane = lane;
  for (auto* pl : {&far_lane.centerline, &far_lane.left_boundary, &far_lane.right_boundary}) {
    for (Vec2& p : *pl) p.y += 4000.0;
  }
  far_lane.rebuild_arclength();
  empty_town.lanes.push_back(far_lane);
  empty_town.spawn_points.push_back({0, 1.0});
  world::LaneIndex empty_index(empty_town);
  Grid r2, l2;
  render_static_channels(empty_town, empty_index, ego, &r2, &l2);
  CHECK(r2.count() == 0);
  CHECK(l2.count() == 0);
}

TEST_CASE("dynamic channels: static scene stacks identical; stop zone red only now") {
  auto town = make_town();
  auto w = make_world(town, 3, 1);

  HistoryBuffer history(4);
  history.reset(make_snapshot(w));
  // advance without moving anything: identical snapshots
  for (int i = 0; i < 12; ++i) history.push(make_snapshot(w));

  std::array<Grid, 12> dyn;
  render_dynamic_channels(history, w.lights(), w.ego().pose, &dyn);
  for (int k = 1; k < 4; ++k) {
    CHECK(grid_hash(dyn[0]) == grid_hash(dyn[static_cast<size_t>(k)]));
    CHECK(grid_hash(dyn[4]) == grid_hash(dyn[static_cast<size_t>(4 + k)]));
  }

  // Force light 0 red now, green in all earlier snapshots; park ego nearby so
  // the zone is in view.
  auto& tl = w.lights()[0];
  w.ego().pose = {tl.stop_zone.center.x - 5.0 * std::cos(tl.stop_zone.heading),
                  tl.stop_zone.center.y - 5.0 * std::sin(tl.stop_zone.heading),
                  tl.stop_zone.heading};
  Snapshot green_snap = make_snapshot(w);
  std::fill(green_snap.light_red.begin(), green_snap.light_red.end(), 0);
  history.reset(green_snap);
  for (int i = 0; i < 12; ++i) history.push(green_snap);
  Snapshot red_snap = green_snap;
  red_snap.light_red[0] = 1;
  history.push(red_snap);

  render_dynamic_channels(history, w.lights(), w.ego().pose, &dyn);
  CHECK(dyn[8].count() > 0);   // slot 0: now, red
  CHECK(dyn[9].count() == 0);  // earlier slots: green
  CHECK(dyn[10].count() == 0);
  CHECK(dyn[11].count() == 0);
}

TEST_CASE("no actors and all green yields 12 zero channels") {
  auto town = make_town();
  auto w = make_world(town, 0, 0);
  for (auto& tl : w.lights()) tl.clock = 0.1;  // green
  HistoryBuffer history(4);
  history.reset(make_snapshot(w));
  std::array<Grid, 12> dyn;
  render_dynamic_channels(history, w.lights(), w.ego().pose, &dyn);
  for (const Grid& g : dyn) CHECK(g.count() == 0);
}

TEST_CASE("observation composer variants") {
  auto town = make_town();
  auto w = make_world(town, 2, 0);
  HistoryBuffer history(4);
  history.reset(make_snapshot(w));

  Grid road, lines;
  render_static_channels(*town, w.index(), w.ego().pose, &road, &lines);
  Grid route_mask;
  route_mask.set(10, 10);
  GridF heatmap;
  heatmap.set(5, 5, 1.0f);

  ObservationComposer::Inputs in;
  in.road = &road;
  in.lane_lines = &lines;
  in.route_mask = &route_mask;
  in.history = &history;
  in.lights = &w.lights();
  in.measurement = make_measurement(w.ego());

  Observation obs;
  ObservationComposer expert(VariantId::Expert);
  expert.compose(in, w.ego().pose, &obs);
  CHECK(obs.channels.size() == 15);
  CHECK(grid_hash(obs.channels[kChRoad]) == grid_hash(road));
  CHECK(obs.measurements.size() == 6);

  // w/o static zeroes channels 0 and 2, leaves the rest.
  ObservationComposer no_static(VariantId::NoStatic);
  Observation obs2;
  no_static.compose(in, w.ego().pose, &obs2);
  CHECK(obs2.channels[kChRoad].count() == 0);
  CHECK(obs2.channels[kChLanes].count() == 0);
  CHECK(grid_hash(obs2.channels[kChRoute]) == grid_hash(obs.channels[kChRoute]));
  CHECK(grid_hash(obs2.channels[kChVehicle0]) == grid_hash(obs.channels[kChVehicle0]));

  // Heatmap variant requires the heatmap input (and only then).
  ObservationComposer heat(VariantId::TargetHeatmap);
  CHECK_THROWS_AS(heat.compose(in, w.ego().pose, &obs2), std::invalid_argument);
  auto in_heat = in;
  in_heat.heatmap = &heatmap;
  in_heat.route_mask = nullptr;
  heat.compose(in_heat, w.ego().pose, &obs2);
  CHECK(obs2.has_real_channel1);
  CHECK(obs2.channels[kChRoute].count() == 0);

  // GT binary stop: all ones while affected.
  ObservationComposer gt_binary(VariantId::GtBinaryStop);
  Snapshot affected = make_snapshot(w);
  affected.ego_affected_gt = true;
  history.reset(affected);
  Observation obs3;
  gt_binary.compose(in, w.ego().pose, &obs3);
  for (int k = 0; k < 4; ++k) {
    CHECK(obs3.channels[static_cast<size_t>(kChStop0 + k)].count() ==
          static_cast<size_t>(kGridSize) * kGridSize);
  }

  // Measurement-flag stop: zeroed stop channels, 7th measurement.
  ObservationComposer flag(VariantId::MeasurementFlagStop);
  Observation obs4;
  flag.compose(in, w.ego().pose, &obs4);
  CHECK(obs4.measurements.size() == 7);
  CHECK(obs4.measurements[6] == 1.0f);
  for (int k = 0; k < 4; ++k) {
    CHECK(obs4.channels[static_cast<size_t>(kChStop0 + k)].count() == 0);
  }
}

TEST_CASE("re-render determinism and rigid motion invariance") {
  // Synthetic town so we can translate everything exactly.
  auto build = [&](Vec2 offset) {
    world::TownMap town;
    world::LaneSegment lane;
    lane.id = 0;
    lane.width = 4.0;
    lane.centerline = {{-60 + offset.x, offset.y}, {60 + offset.x, offset.y}};
    lane.left_boundary = {{-60 + offset.x, 2 + offset.y}, {60 + offset.x, 2 + offset.y}};
    lane.right_boundary = {{-60 + offset.x, -2 + offset.y}, {60 + offset.x, -2 + offset.y}};
    lane.rebuild_arclength();
    town.lanes.push_back(lane);
    town.spawn_points.push_back({0, 30.0});
    return town;
  };
  const Vec2 shift{17.3, -41.9};
  const world::TownMap a = build({0, 0});
  const world::TownMap b = build(shift);
  world::LaneIndex ia(a), ib(b);
  const Pose ego_a{5.0, 0.4, 0.2};
  const Pose ego_b{5.0 + shift.x, 0.4 + shift.y, 0.2};
  Grid ra1, la1, ra2, la2, rb, lb;
  render_static_channels(a, ia, ego_a, &ra1, &la1);
  render_static_channels(a, ia, ego_a, &ra2, &la2);
  render_static_channels(b, ib, ego_b, &rb, &lb);
  CHECK(grid_hash(ra1) == grid_hash(ra2));  // identical re-render
  CHECK(grid_hash(la1) == grid_hash(la2));
  CHECK(grid_hash(ra1) == grid_hash(rb));   // rigid-motion consistency
  CHECK(grid_hash(la1) == grid_hash(lb));
}

TEST_CASE("route channel lies within dilated road over random frames") {
  auto town = make_town(3);
  auto w = make_world(town, 0, 0);
  Rng rng(5);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto& spawns = town->spawn_points;
    const auto& sp = spawns[rng.uniform_int(spawns.size())];
    const auto& lane = town->lane(sp.lane);
    const double s = rng.uniform(0.0, lane.length);
    const Pose ego{lane.point_at(s).x, lane.point_at(s).y, lane.heading_at(s)};

    Grid road, lines;
    render_static_channels(*town, w.index(), ego, &road, &lines);

    // Walk the lane graph ahead as a stand-in route polyline.
    std::vector<Vec2> pts;
    int32_t cur = sp.lane;
    double cs = s;
    Rng walk(rng.next_u64());
    for (int i = 0; i < 300; ++i) {
      const auto& l = town->lane(cur);
      if (cs > l.length) {
        if (l.successors.empty()) break;
        cur = l.successors[walk.uniform_int(l.successors.size())];
        cs = 0.0;
        continue;
      }
      pts.push_back(l.point_at(cs));
      cs += 0.2;
    }
    Grid route_mask;
    bev::stroke_polyline_world(&route_mask, ego, pts, 1);

    const Grid road_dilated = dilate(road);
    for (int r = 0; r < kGridSize; ++r) {
      for (int c = 0; c < kGridSize; ++c) {
        if (route_mask.at(r, c)) {
          REQUIRE(road_dilated.at(r, c) == 1);
        }
      }
    }
    ++checked;
  }
  CHECK(checked == 200);
}

TEST_CASE("pooling matches a straightforward average") {
  Observation obs;
  Rng rng(9);
  for (auto& g : obs.channels) {
    for (auto& c : g.cells) c = rng.bernoulli(0.3) ? 1 : 0;
  }
  obs.measurements = {0, 0, 0, 0, 0, 0};
  const int pool = 4;
  const int side = kGridSize / pool;
  std::vector<float> pooled(static_cast<size_t>(kChannelCount) * side * side);
  pool_observation(obs, pool, pooled.data());
  for (int ch = 0; ch < kChannelCount; ch += 7) {
    for (int r = 0; r < side; r += 11) {
      for (int c = 0; c < side; c += 13) {
        float acc = 0;
        for (int dr = 0; dr < pool; ++dr) {
          for (int dc = 0; dc < pool; ++dc) {
            acc += obs.channels[static_cast<size_t>(ch)].at(r * pool + dr, c * pool + dc);
          }
        }
        acc /= pool * pool;
        CHECK(pooled[(static_cast<size_t>(ch) * side + r) * side + c] == doctest::Approx(acc));
      }
    }
  }
}
