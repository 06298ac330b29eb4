#include <algorithm>
#include <functional>
#include <limits>
#include <queue>

#include "bevdrive/route/route.hpp"

namespace bevdrive::route {

namespace {

constexpr double kSnapMaxDist = 5.0;

// Even resampling that lands exactly on both endpoints; spacing stays within
// 5% of the target for routes longer than a couple of meters.
Polyline resample_even(const std::vector<Vec2>& pts, double target) {
  Polyline src;
  src.pts = pts;
  src.rebuild_arclength();
  Polyline out;
  const double total = src.length();
  if (pts.empty()) return out;
  if (total <= 1e-9) {
    out.pts = {pts.front()};
    out.rebuild_arclength();
    return out;
  }
  const int nseg = std::max<int>(1, static_cast<int>(std::lround(total / target)));
  const double spacing = total / nseg;
  out.pts.reserve(static_cast<size_t>(nseg) + 1);
  for (int i = 0; i <= nseg; ++i) out.pts.push_back(src.point_at(i * spacing));
  out.rebuild_arclength();
  return out;
}

struct Leg {
  std::vector<LaneSpan> spans;
  double cost = 0.0;
};

// Dijkstra from (start.lane, start.s) to (goal_lane, goal_s). Ties break
// toward the lower lane id via the priority queue ordering.
std::optional<Leg> dijkstra_leg(const world::TownMap& town, const LanePosition& start,
                                int32_t goal_lane, double goal_s) {
  if (start.lane == goal_lane && goal_s >= start.s - 1e-9) {
    Leg leg;
    leg.spans.push_back({start.lane, start.s, goal_s});
    leg.cost = goal_s - start.s;
    return leg;
  }

  const double inf = std::numeric_limits<double>::max();
  std::vector<double> dist(town.lanes.size(), inf);  // cost at lane entry
  std::vector<int32_t> parent(town.lanes.size(), -1);
  using Item = std::pair<double, int32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;

  const double exit_cost = town.lane(start.lane).length - start.s;
  for (int32_t succ : town.lane(start.lane).successors) {
    if (exit_cost < dist[static_cast<size_t>(succ)]) {
      dist[static_cast<size_t>(succ)] = exit_cost;
      parent[static_cast<size_t>(succ)] = start.lane;
      queue.push({exit_cost, succ});
    }
  }

  std::vector<uint8_t> settled(town.lanes.size(), 0);
  while (!queue.empty()) {
    const auto [d, lane] = queue.top();
    queue.pop();
    if (settled[static_cast<size_t>(lane)]) continue;
    settled[static_cast<size_t>(lane)] = 1;
    if (lane == goal_lane) {
      Leg leg;
      leg.cost = d + goal_s;
      std::vector<int32_t> chain = {lane};
      int32_t cur = parent[static_cast<size_t>(lane)];
      while (cur != start.lane) {
        chain.push_back(cur);
        cur = parent[static_cast<size_t>(cur)];
      }
      chain.push_back(start.lane);
      std::reverse(chain.begin(), chain.end());
      for (size_t i = 0; i < chain.size(); ++i) {
        const world::LaneSegment& l = town.lane(chain[i]);
        LaneSpan span;
        span.lane = chain[i];
        span.entry_s = (i == 0) ? start.s : 0.0;
        span.exit_s = (i + 1 == chain.size()) ? goal_s : l.length;
        leg.spans.push_back(span);
      }
      return leg;
    }
    const double through = d + town.lane(lane).length;
    for (int32_t succ : town.lane(lane).successors) {
      if (settled[static_cast<size_t>(succ)]) continue;
      if (through < dist[static_cast<size_t>(succ)]) {
        dist[static_cast<size_t>(succ)] = through;
        parent[static_cast<size_t>(succ)] = lane;
        queue.push({through, succ});
      }
    }
  }
  return std::nullopt;
}

}  // namespace

Route plan_shortest_path(const world::TownMap& town, const world::LaneIndex& index,
                         const LanePosition& start, const std::vector<Vec2>& waypoints) {
  Route route;
  LanePosition cur = start;
  for (size_t w = 0; w < waypoints.size(); ++w) {
    const auto snap = index.snap(town, waypoints[w], kSnapMaxDist);
    if (!snap) throw PlanError(static_cast<int>(w));
    const auto leg = dijkstra_leg(town, cur, snap->lane, snap->s);
    if (!leg) throw PlanError(static_cast<int>(w));
    for (const LaneSpan& span : leg->spans) {
      if (std::abs(span.exit_s - span.entry_s) < 1e-9 && !route.lane_path.empty()) continue;
      route.lane_path.push_back(span);
    }
    cur = {snap->lane, snap->s};
  }

  // Densify: walk each span's centerline slice, then resample at 0.2 m.
  std::vector<Vec2> raw;
  for (const LaneSpan& span : route.lane_path) {
    const world::LaneSegment& lane = town.lane(span.lane);
    const double s0 = std::min(span.entry_s, span.exit_s);
    const double s1 = std::max(span.entry_s, span.exit_s);
    raw.push_back(lane.point_at(s0));
    for (size_t i = 0; i < lane.centerline.size(); ++i) {
      if (lane.cum_s[i] > s0 + 1e-9 && lane.cum_s[i] < s1 - 1e-9) {
        raw.push_back(lane.centerline[i]);
      }
    }
    raw.push_back(lane.point_at(s1));
  }
  route.polyline = resample_even(raw, 0.2);
  route.length = route.polyline.length();
  return route;
}

std::optional<double> shortest_path_bruteforce(const world::TownMap& town,
                                               const LanePosition& start, int32_t goal_lane,
                                               double goal_s) {
  double best = std::numeric_limits<double>::max();
  if (start.lane == goal_lane && goal_s >= start.s - 1e-9) {
    best = goal_s - start.s;
  }
  // DFS over simple paths (the start lane may be re-entered once).
  std::vector<uint8_t> visited(town.lanes.size(), 0);
  const double exit_cost = town.lane(start.lane).length - start.s;

  std::function<void(int32_t, double)> dfs = [&](int32_t lane, double cost) {
    if (cost >= best) return;
    if (lane == goal_lane) {
      best = std::min(best, cost + goal_s);
      return;
    }
    if (visited[static_cast<size_t>(lane)]) return;
    visited[static_cast<size_t>(lane)] = 1;
    for (int32_t succ : town.lane(lane).successors) {
      dfs(succ, cost + town.lane(lane).length);
    }
    visited[static_cast<size_t>(lane)] = 0;
  };
  for (int32_t succ : town.lane(start.lane).successors) {
    dfs(succ, exit_cost);
  }
  if (best == std::numeric_limits<double>::max()) return std::nullopt;
  return best;
}

WaypointSet WaypointSet::from_remaining(const std::vector<Vec2>& remaining_world,
                                        const Pose& ego) {
  WaypointSet set;
  if (remaining_world.empty()) return set;
  for (size_t i = 0; i < set.points.size(); ++i) {
    const Vec2& w = remaining_world[std::min(i, remaining_world.size() - 1)];
    set.points[i] = ego.to_local(w);
  }
  return set;
}

}  // namespace bevdrive::route
