#include "bevdrive/world/town_gen.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "bevdrive/rng.hpp"

namespace bevdrive::world {

namespace {

struct LineId {
  bool horizontal;
  int index;  // grid line index
  bool operator<(const LineId& o) const {
    return std::tie(horizontal, index) < std::tie(o.horizontal, o.index);
  }
};

struct NodeKey {
  int i, j;
  bool operator<(const NodeKey& o) const { return std::tie(i, j) < std::tie(o.i, o.j); }
};

// Per (line, node) lane endpoints used to wire junction connectors.
struct PortLanes {
  std::vector<int32_t> in_lanes;   // lanes arriving at the node, index = lane slot
  std::vector<int32_t> out_lanes;  // lanes leaving the node
};

std::vector<Vec2> offset_polyline(const std::vector<Vec2>& pts, double offset) {
  std::vector<Vec2> out(pts.size());
  for (size_t v = 0; v < pts.size(); ++v) {
    Vec2 dir;
    if (v == 0) {
      dir = pts[1] - pts[0];
    } else if (v + 1 == pts.size()) {
      dir = pts[v] - pts[v - 1];
    } else {
      dir = pts[v + 1] - pts[v - 1];
    }
    const Vec2 n = dir.normalized().perp();  // left normal
    out[v] = pts[v] + n * offset;
  }
  return out;
}

std::vector<Vec2> connector_curve(const Vec2& p0, double h_in, const Vec2& p2, double h_out) {
  const Vec2 d0{std::cos(h_in), std::sin(h_in)};
  const Vec2 d2{std::cos(h_out), std::sin(h_out)};
  const double turn = std::abs(wrap_angle(h_out - h_in));
  if (turn < 0.05) {
    // Straight or lane-change connector.
    const Vec2 mid = (p0 + p2) * 0.5;
    return {p0, mid, p2};
  }
  // Quadratic bezier through the tangent intersection.
  const double denom = d0.cross(d2);
  Vec2 ctrl = (p0 + p2) * 0.5;
  if (std::abs(denom) > 1e-9) {
    const double t = (p2 - p0).cross(d2) / denom;
    ctrl = p0 + d0 * t;
  }
  std::vector<Vec2> pts;
  const int n = 9;
  pts.reserve(n);
  for (int s = 0; s < n; ++s) {
    const double t = static_cast<double>(s) / (n - 1);
    const double a = (1 - t) * (1 - t), b = 2 * t * (1 - t), c = t * t;
    pts.push_back(p0 * a + ctrl * b + p2 * c);
  }
  return pts;
}

}  // namespace

TownMap generate_town(uint64_t seed, const TownSpec& spec) {
  if (spec.grid_rows < 1 || spec.grid_cols < 1)
    throw std::runtime_error("town spec: grid must be at least 1x1");
  if (spec.lanes < 1) throw std::runtime_error("town spec: lane count must be >= 1");
  if (spec.lane_width <= 0.0) throw std::runtime_error("town spec: lane width must be > 0");
  if (spec.junction_fraction < 0.0 || spec.junction_fraction > 1.0)
    throw std::runtime_error("town spec: junction fraction must be in [0, 1]");
  if (spec.box_clearance_m < 0.5)
    throw std::runtime_error("town spec: junction clearance too small");
  if (spec.green_s <= 0 || spec.yellow_s <= 0 || spec.red_s <= 0)
    throw std::runtime_error("town spec: phase durations must be > 0");
  if (spec.green_s > spec.yellow_s + spec.red_s)
    throw std::runtime_error("town spec: green > yellow + red breaks conflict exclusivity");

  const int R = spec.grid_rows, C = spec.grid_cols;
  const double road_half = spec.lanes * spec.lane_width * 0.5;
  const double box_half = road_half + spec.box_clearance_m;
  if (spec.block_m < 2.0 * box_half + 10.0)
    throw std::runtime_error("town spec: blocks too small to close a drivable network");

  Rng rng(seed);
  Rng line_rng = rng.fork(1);
  Rng light_rng = rng.fork(2);

  // Interior line selection.
  auto pick_lines = [&](int count, double fraction) {
    std::vector<int> all;
    for (int i = 1; i <= count; ++i) all.push_back(i);
    // seeded partial shuffle
    for (size_t i = all.size(); i > 1; --i) {
      const size_t k = line_rng.uniform_int(i);
      std::swap(all[i - 1], all[k]);
    }
    const int keep = static_cast<int>(std::lround(fraction * count));
    all.resize(static_cast<size_t>(keep));
    std::sort(all.begin(), all.end());
    return all;
  };
  std::vector<int> h_lines = {0, R};
  std::vector<int> v_lines = {0, C};
  for (int i : pick_lines(R - 1, spec.junction_fraction)) h_lines.insert(h_lines.end() - 1, i);
  for (int j : pick_lines(C - 1, spec.junction_fraction)) v_lines.insert(v_lines.end() - 1, j);
  std::sort(h_lines.begin(), h_lines.end());
  std::sort(v_lines.begin(), v_lines.end());

  // Direction of travel per line (+1 = +x or +y). The perimeter runs
  // counter-clockwise; interior lines alternate by parity.
  auto h_dir = [&](int i) { return i == 0 ? +1 : (i == R ? -1 : (i % 2 == 1 ? -1 : +1)); };
  auto v_dir = [&](int j) { return j == 0 ? -1 : (j == C ? +1 : (j % 2 == 1 ? +1 : -1)); };

  TownMap town;
  std::map<std::pair<LineId, NodeKey>, PortLanes> ports;
  const double B = spec.block_m;

  auto add_lane = [&](std::vector<Vec2> center, double width, BoundaryKind lk,
                      BoundaryKind rk, int32_t junction_id) {
    LaneSegment lane;
    lane.id = static_cast<int32_t>(town.lanes.size());
    lane.centerline = std::move(center);
    lane.width = width;
    lane.left_boundary = offset_polyline(lane.centerline, width * 0.5);
    lane.right_boundary = offset_polyline(lane.centerline, -width * 0.5);
    lane.left_kind = lk;
    lane.right_kind = rk;
    lane.junction_id = junction_id;
    lane.rebuild_arclength();
    town.lanes.push_back(std::move(lane));
    return town.lanes.back().id;
  };

  // Street segments between consecutive nodes on each kept line.
  auto build_line = [&](LineId lid) {
    const bool horiz = lid.horizontal;
    const int dir = horiz ? h_dir(lid.index) : v_dir(lid.index);
    const std::vector<int>& crossings = horiz ? v_lines : h_lines;
    std::vector<int> order = crossings;
    if (dir < 0) std::reverse(order.begin(), order.end());
    for (size_t s = 0; s + 1 < order.size(); ++s) {
      const int a = order[s], b = order[s + 1];
      const double fixed = lid.index * B;
      Vec2 pa = horiz ? Vec2{a * B, fixed} : Vec2{fixed, a * B};
      Vec2 pb = horiz ? Vec2{b * B, fixed} : Vec2{fixed, b * B};
      const Vec2 d = (pb - pa).normalized();
      pa = pa + d * box_half;
      pb = pb - d * box_half;
      const Vec2 left = d.perp();
      PortLanes* port_out = &ports[{lid, horiz ? NodeKey{lid.index, a} : NodeKey{a, lid.index}}];
      PortLanes* port_in = &ports[{lid, horiz ? NodeKey{lid.index, b} : NodeKey{b, lid.index}}];
      port_out->out_lanes.resize(static_cast<size_t>(spec.lanes));
      port_in->in_lanes.resize(static_cast<size_t>(spec.lanes));
      for (int k = 0; k < spec.lanes; ++k) {
        const double off = (k - (spec.lanes - 1) * 0.5) * spec.lane_width;
        const Vec2 o = left * off;
        const BoundaryKind lk = (k + 1 < spec.lanes) ? BoundaryKind::Dashed : BoundaryKind::Solid;
        const BoundaryKind rk = (k > 0) ? BoundaryKind::Dashed : BoundaryKind::Solid;
        const Vec2 mid = (pa + pb) * 0.5 + o;
        const int32_t id = add_lane({pa + o, mid, pb + o}, spec.lane_width, lk, rk, -1);
        port_out->out_lanes[static_cast<size_t>(k)] = id;
        port_in->in_lanes[static_cast<size_t>(k)] = id;
      }
    }
  };
  for (int i : h_lines) build_line({true, i});
  for (int j : v_lines) build_line({false, j});

  // Junction nodes: connectors, boxes, lights.
  auto connect = [&](const std::vector<int32_t>& in, const std::vector<int32_t>& out,
                     int32_t junction_id, std::vector<int32_t>* junction_lanes) {
    for (int k = 0; k < static_cast<int>(in.size()); ++k) {
      // k -> k plus adjacent-lane moves so multi-lane streets stay connected.
      for (int off : {0, 1, -1}) {
        const int k2 = k + off;
        if (k2 < 0 || k2 >= static_cast<int>(out.size())) continue;
        const int32_t in_id = in[static_cast<size_t>(k)];
        const int32_t out_id = out[static_cast<size_t>(k2)];
        const LaneSegment& lin = town.lanes[static_cast<size_t>(in_id)];
        const LaneSegment& lout = town.lanes[static_cast<size_t>(out_id)];
        const Vec2 p0 = lin.centerline.back();
        const Vec2 p2 = lout.centerline.front();
        const double h0 = lin.heading_at(lin.length);
        const double h2 = lout.heading_at(0.0);
        const int32_t cid = add_lane(connector_curve(p0, h0, p2, h2), spec.lane_width,
                                     BoundaryKind::None, BoundaryKind::None, junction_id);
        town.lanes[static_cast<size_t>(in_id)].successors.push_back(cid);
        town.lanes[static_cast<size_t>(cid)].predecessors.push_back(in_id);
        town.lanes[static_cast<size_t>(cid)].successors.push_back(out_id);
        town.lanes[static_cast<size_t>(out_id)].predecessors.push_back(cid);
        junction_lanes->push_back(cid);
      }
    }
  };

  for (int i : h_lines) {
    for (int j : v_lines) {
      const NodeKey key{i, j};
      const LineId hline{true, i};
      const LineId vline{false, j};
      const bool h_exists = ports.count({hline, key}) > 0;
      const bool v_exists = ports.count({vline, key}) > 0;
      if (!h_exists && !v_exists) continue;

      Junction junction;
      junction.id = static_cast<int32_t>(town.junctions.size());
      const Vec2 c{j * B, i * B};
      junction.box = {{c.x - box_half, c.y - box_half},
                      {c.x + box_half, c.y - box_half},
                      {c.x + box_half, c.y + box_half},
                      {c.x - box_half, c.y + box_half}};

      const PortLanes h_port = h_exists ? ports[{hline, key}] : PortLanes{};
      const PortLanes v_port = v_exists ? ports[{vline, key}] : PortLanes{};

      // All combinations of incoming stream x outgoing stream live here:
      // straight-through for a passing line, turns between lines.
      if (!h_port.in_lanes.empty() && !h_port.out_lanes.empty())
        connect(h_port.in_lanes, h_port.out_lanes, junction.id, &junction.lanes);
      if (!h_port.in_lanes.empty() && !v_port.out_lanes.empty())
        connect(h_port.in_lanes, v_port.out_lanes, junction.id, &junction.lanes);
      if (!v_port.in_lanes.empty() && !v_port.out_lanes.empty())
        connect(v_port.in_lanes, v_port.out_lanes, junction.id, &junction.lanes);
      if (!v_port.in_lanes.empty() && !h_port.out_lanes.empty())
        connect(v_port.in_lanes, h_port.out_lanes, junction.id, &junction.lanes);

      // Lights where streams conflict: both a horizontal and a vertical
      // incoming stream exist (crossings and merge tees).
      const bool conflicted = !h_port.in_lanes.empty() && !v_port.in_lanes.empty();
      if (conflicted) {
        const double cycle = spec.green_s + spec.yellow_s + spec.red_s;
        const double stagger = light_rng.uniform01() * cycle;
        auto add_lights = [&](const std::vector<int32_t>& in_lanes, int group_axis) {
          for (int32_t lane_id : in_lanes) {
            const LaneSegment& lane = town.lanes[static_cast<size_t>(lane_id)];
            TrafficLight tl;
            tl.id = static_cast<int32_t>(town.lights.size());
            const double h = lane.heading_at(lane.length);
            const Vec2 fwd{std::cos(h), std::sin(h)};
            tl.stop_zone.center = lane.centerline.back() - fwd * 2.0;
            tl.stop_zone.heading = h;
            tl.stop_zone.half_extents = {2.0, lane.width * 0.5};
            tl.green_s = spec.green_s;
            tl.yellow_s = spec.yellow_s;
            tl.red_s = spec.red_s;
            tl.conflict_group = junction.id * 2 + group_axis;
            tl.junction_id = junction.id;
            tl.controlled_lane = lane_id;
            const double offset = group_axis == 0 ? 0.0 : cycle * 0.5;
            tl.clock = std::fmod(stagger + offset, cycle);
            town.lights.push_back(tl);
          }
        };
        add_lights(h_port.in_lanes, 0);
        add_lights(v_port.in_lanes, 1);
      }
      town.junctions.push_back(std::move(junction));
    }
  }

  // Spawn points at mid-segment on street lanes.
  for (const LaneSegment& lane : town.lanes) {
    if (lane.junction_id >= 0 || lane.length < 12.0) continue;
    town.spawn_points.push_back({lane.id, lane.length * 0.5});
  }

  town.validate();

  // The whole network must be drivable from the first spawn.
  std::unordered_set<int32_t> reached;
  std::vector<int32_t> stack = {town.spawn_points.front().lane};
  while (!stack.empty()) {
    const int32_t id = stack.back();
    stack.pop_back();
    if (!reached.insert(id).second) continue;
    for (int32_t s : town.lanes[static_cast<size_t>(id)].successors) stack.push_back(s);
  }
  if (reached.size() != town.lanes.size())
    throw std::runtime_error("generated network is not connected");

  return town;
}

}  // namespace bevdrive::world
