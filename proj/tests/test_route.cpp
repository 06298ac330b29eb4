#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bevdrive/bev/raster.hpp"
#include "bevdrive/route/route.hpp"
#include "bevdrive/world/town_gen.hpp"

using namespace bevdrive;
using namespace bevdrive::route;

namespace {

// Hand-built fork: lane 0 splits into a 100 m branch (1) and a 120 m branch
// (2+3), both rejoining at lane 4 where the waypoint sits.
world::TownMap fork_town() {
  world::TownMap town;
  auto add = [&](std::vector<Vec2> center, std::vector<int32_t> succ) {
    world::LaneSegment l;
    l.id = static_cast<int32_t>(town.lanes.size());
    l.width = 3.5;
    l.centerline = std::move(center);
    l.left_boundary = l.centerline;
    l.right_boundary = l.centerline;
    for (auto& p : l.left_boundary) p.y += 1.75;
    for (auto& p : l.right_boundary) p.y -= 1.75;
    l.successors = std::move(succ);
    l.rebuild_arclength();
    town.lanes.push_back(l);
    return l.id;
  };
  add({{0, 0}, {20, 0}}, {1, 2});            // 0: stem, 20 m
  add({{20, 0}, {120, 0}}, {4});             // 1: short branch, 100 m
  add({{20, 0}, {20, 60}}, {3});             // 2: long branch part A, 60 m
  add({{20, 60}, {80, 60}, {80, 0}}, {4});   // 3: part B, 120 m total with 2
  add({{120, 0}, {160, 0}}, {});             // 4: goal lane
  for (auto& l : town.lanes) {
    for (int32_t s : l.successors) {
      town.lanes[static_cast<size_t>(s)].predecessors.push_back(l.id);
    }
  }
  town.spawn_points.push_back({0, 0.0});
  return town;
}

}  // namespace

TEST_CASE("gnss_to_local examples") {
  GnssCoord ego{8.0, 49.0, 0.0};

  const Vec2 same = gnss_to_local(ego, ego, 1.2);
  CHECK(same.x == doctest::Approx(0.0));
  CHECK(same.y == doctest::Approx(0.0));

  GnssCoord north = ego;
  north.latitude += 0.001;
  // Heading due north (world frame x=east, y=north -> north = pi/2).
  const Vec2 fwd = gnss_to_local(north, ego, M_PI / 2);
  CHECK(fwd.x == doctest::Approx(111.194).epsilon(1e-4));
  CHECK(fwd.y == doctest::Approx(0.0).epsilon(1e-6));

  // Heading due east: the same target is 111.194 m to the left.
  const Vec2 left = gnss_to_local(north, ego, 0.0);
  CHECK(left.x == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(left.y == doctest::Approx(111.194).epsilon(1e-4));
}

TEST_CASE("gnss_to_local inverts local_to_gnss within 1e-6 m") {
  Rng rng(31);
  for (int i = 0; i < 10000; ++i) {
    GnssCoord ego{8.0 + rng.uniform(-0.01, 0.01), 49.0 + rng.uniform(-0.01, 0.01), 0.0};
    const double heading = rng.uniform(-M_PI, M_PI);
    const Vec2 local{rng.uniform(-1000, 1000), rng.uniform(-1000, 1000)};
    const GnssCoord g = local_to_gnss(local, ego, heading);
    const Vec2 back = gnss_to_local(g, ego, heading);
    CHECK(std::abs(back.x - local.x) < 1e-6);
    CHECK(std::abs(back.y - local.y) < 1e-6);
  }
}

TEST_CASE("planner: single waypoint ahead on the current lane") {
  world::TownSpec spec;
  spec.grid_rows = 1;
  spec.grid_cols = 1;
  spec.block_m = 60.0;
  spec.junction_fraction = 0.0;
  const world::TownMap town = world::generate_town(1, spec);
  world::LaneIndex index(town);

  const auto& sp = town.spawn_points.front();
  const auto& lane = town.lane(sp.lane);
  const double s0 = 5.0;
  const Vec2 wp = lane.point_at(s0 + 20.0);
  const Route r = plan_shortest_path(town, index, {sp.lane, s0}, {wp});
  CHECK(r.length == doctest::Approx(20.0).epsilon(0.01));
  CHECK(r.lane_path.size() == 1);
  CHECK(r.lane_path[0].lane == sp.lane);

  // Polyline spacing stays within [0.19, 0.21].
  for (size_t i = 1; i < r.polyline.pts.size(); ++i) {
    const double d = (r.polyline.pts[i] - r.polyline.pts[i - 1]).norm();
    CHECK(d >= 0.19);
    CHECK(d <= 0.21);
  }
}

TEST_CASE("planner: fork picks the 100 m branch over 120 m") {
  const world::TownMap town = fork_town();
  world::LaneIndex index(town);
  const Vec2 wp{140.0, 0.0};
  const Route r = plan_shortest_path(town, index, {0, 0.0}, {wp});
  bool used_short = false, used_long = false;
  for (const auto& span : r.lane_path) {
    used_short |= span.lane == 1;
    used_long |= span.lane == 2 || span.lane == 3;
  }
  CHECK(used_short);
  CHECK(!used_long);
  CHECK(r.length == doctest::Approx(20.0 + 100.0 + 20.0).epsilon(0.01));
}

TEST_CASE("planner: disconnected waypoint errors with index 0") {
  world::TownMap town = fork_town();
  // Disconnected island lane far away.
  world::LaneSegment island;
  island.id = static_cast<int32_t>(town.lanes.size());
  island.width = 3.5;
  island.centerline = {{1000, 1000}, {1020, 1000}};
  island.left_boundary = {{1000, 1001.75}, {1020, 1001.75}};
  island.right_boundary = {{1000, 998.25}, {1020, 998.25}};
  island.rebuild_arclength();
  town.lanes.push_back(island);
  town.spawn_points.push_back({island.id, 1.0});
  world::LaneIndex index(town);

  try {
    plan_shortest_path(town, index, {0, 0.0}, {{1010, 1000}});
    FAIL("expected PlanError");
  } catch (const PlanError& e) {
    CHECK(e.unreachable_index == 0);
  }
}

TEST_CASE("planner optimal vs brute force on random small graphs") {
  Rng rng(77);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    // Random DAG-ish town over <= 10 lanes (cycles allowed).
    world::TownMap town;
    const int n = 3 + static_cast<int>(rng.uniform_int(8));
    for (int i = 0; i < n; ++i) {
      world::LaneSegment l;
      l.id = i;
      l.width = 3.0;
      const double x0 = rng.uniform(-100, 100), y0 = rng.uniform(-100, 100);
      const double len = rng.uniform(5, 80);
      const double h = rng.uniform(-M_PI, M_PI);
      l.centerline = {{x0, y0}, {x0 + len * std::cos(h), y0 + len * std::sin(h)}};
      l.left_boundary = l.centerline;
      l.right_boundary = l.centerline;
      l.rebuild_arclength();
      town.lanes.push_back(l);
    }
    for (int i = 0; i < n; ++i) {
      const int degree = static_cast<int>(rng.uniform_int(3));
      for (int d = 0; d < degree; ++d) {
        const int succ = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n)));
        town.lanes[static_cast<size_t>(i)].successors.push_back(succ);
        town.lanes[static_cast<size_t>(succ)].predecessors.push_back(i);
      }
    }
    town.spawn_points.push_back({0, 0.0});

    const int goal = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(n)));
    const double goal_s = rng.uniform(0.0, town.lane(goal).length);
    const LanePosition start{0, rng.uniform(0.0, town.lane(0).length)};
    const auto brute = shortest_path_bruteforce(town, start, goal, goal_s);

    world::LaneIndex index(town);
    const Vec2 wp = town.lane(goal).point_at(goal_s);
    // The waypoint may snap to a different overlapping lane; force the exact
    // goal by comparing costs only when the snap hits the goal lane.
    const auto snap = index.snap(town, wp, 5.0);
    if (!snap || snap->lane != goal) continue;

    if (!brute.has_value()) {
      CHECK_THROWS_AS(plan_shortest_path(town, index, start, {wp}), PlanError);
    } else {
      const Route r = plan_shortest_path(town, index, start, {wp});
      double span_total = 0.0;
      for (const auto& s : r.lane_path) span_total += std::abs(s.exit_s - s.entry_s);
      CHECK(span_total == doctest::Approx(*brute).epsilon(1e-6));
    }
    ++compared;
  }
  CHECK(compared > 100);
}

TEST_CASE("route mask: straight route gives a 3 cell band") {
  Route r;
  std::vector<Vec2> pts;
  for (double x = 0.0; x <= 30.0; x += 0.2) pts.push_back({x, 0.0});
  r.polyline.pts = pts;
  r.polyline.rebuild_arclength();
  r.length = r.polyline.length();

  bev::Grid mask;
  render_route_mask(r, Pose{0, 0, 0}, &mask);
  // Rows from the ego row upward: exactly cols 95..97.
  for (int row = bev::kEgoRow; row >= 5; --row) {
    CHECK(mask.at(row, 95) == 1);
    CHECK(mask.at(row, 96) == 1);
    CHECK(mask.at(row, 97) == 1);
    CHECK(mask.at(row, 94) == 0);
    CHECK(mask.at(row, 98) == 0);
  }

  // Route entirely behind the ego beyond 8 m: empty channel.
  bev::Grid behind;
  render_route_mask(r, Pose{45.0, 0, 0}, &behind);
  CHECK(behind.count() == 0);

  // Empty route: empty channel.
  Route empty;
  bev::Grid eg;
  render_route_mask(empty, Pose{0, 0, 0}, &eg);
  CHECK(eg.count() == 0);
}

TEST_CASE("route mask invariant under re-resampling") {
  Route r;
  std::vector<Vec2> pts;
  for (double x = 0.0; x <= 25.0; x += 0.2) {
    pts.push_back({x, 2.0 * std::sin(x * 0.2)});
  }
  r.polyline.pts = pts;
  r.polyline.rebuild_arclength();

  // Same curve re-sampled at a different density (subdivision keeps the
  // geometry identical, unlike chord-skipping interpolation).
  Route r2;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const double t = k / 3.0;
      r2.polyline.pts.push_back(pts[i] + (pts[i + 1] - pts[i]) * t);
    }
  }
  r2.polyline.pts.push_back(pts.back());
  r2.polyline.rebuild_arclength();
  CHECK(r2.polyline.length() == doctest::Approx(r.polyline.length()).epsilon(1e-12));

  bev::Grid a, b;
  render_route_mask(r, Pose{0, 0, 0}, &a);
  render_route_mask(r2, Pose{0, 0, 0}, &b);
  CHECK(bev::grid_hash(a) == bev::grid_hash(b));

  // Coarser interpolating resample may move the curve by sub-cell amounts;
  // the rendered mask must stay essentially the same.
  Route r3;
  r3.polyline = resample_polyline(r.polyline.pts, 0.2);
  bev::Grid c;
  render_route_mask(r3, Pose{0, 0, 0}, &c);
  size_t differing = 0;
  for (size_t i = 0; i < a.cells.size(); ++i) differing += a.cells[i] != c.cells[i];
  CHECK(differing <= a.count() / 50);
}

TEST_CASE("target heatmap examples") {
  bev::GridF h;
  render_target_heatmap({0.0, 0.0}, &h);
  CHECK(h.at(bev::kEgoRow, bev::kEgoCol) == doctest::Approx(1.0));

  // Exactly sigma (10 cells) from the peak.
  CHECK(h.at(bev::kEgoRow, bev::kEgoCol + 10) == doctest::Approx(std::exp(-0.5)).epsilon(1e-6));
  CHECK(h.at(bev::kEgoRow - 10, bev::kEgoCol) == doctest::Approx(std::exp(-0.5)).epsilon(1e-6));

  // 100 m ahead: peak clamps onto row 0.
  bev::GridF far;
  render_target_heatmap({100.0, 0.0}, &far);
  CHECK(far.at(0, bev::kEgoCol) == doctest::Approx(1.0));
  float best = 0.0f;
  for (int r = 0; r < bev::kGridSize; ++r) {
    for (int c = 0; c < bev::kGridSize; ++c) best = std::max(best, far.at(r, c));
  }
  CHECK(best == doctest::Approx(1.0));
}

TEST_CASE("waypoint set pads to five") {
  const Pose ego{0, 0, 0};
  const auto set = WaypointSet::from_remaining({{10, 0}, {20, 5}}, ego);
  CHECK(set.points[0].x == doctest::Approx(10.0));
  CHECK(set.points[1].x == doctest::Approx(20.0));
  for (int i = 2; i < 5; ++i) {
    CHECK(set.points[static_cast<size_t>(i)].x == doctest::Approx(20.0));
    CHECK(set.points[static_cast<size_t>(i)].y == doctest::Approx(5.0));
  }
}
