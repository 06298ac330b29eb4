#include "bevdrive/bev/raster.hpp"

#include <algorithm>
#include <cmath>

#include "bevdrive/serial.hpp"

namespace bevdrive::bev {

void fill_polygon(Grid* grid, const std::vector<GridCoord>& poly) {
  const size_t n = poly.size();
  if (n < 3) return;
  double vmin = poly[0].v, vmax = poly[0].v;
  for (const GridCoord& p : poly) {
    vmin = std::min(vmin, p.v);
    vmax = std::max(vmax, p.v);
  }
  const int r0 = std::max(0, static_cast<int>(std::floor(vmin - 0.5)));
  const int r1 = std::min(kGridSize - 1, static_cast<int>(std::ceil(vmax)));

  std::vector<double> crossings;
  for (int r = r0; r <= r1; ++r) {
    const double yc = r + 0.5;
    crossings.clear();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
      const GridCoord& a = poly[j];
      const GridCoord& b = poly[i];
      if ((b.v <= yc) != (a.v <= yc)) {
        crossings.push_back(b.u + (yc - b.v) * (a.u - b.u) / (a.v - b.v));
      }
    }
    if (crossings.size() < 2) continue;
    std::sort(crossings.begin(), crossings.end());
    for (size_t k = 0; k + 1 < crossings.size(); k += 2) {
      // Cells whose center u = c + 0.5 satisfies x1 <= u < x2.
      int c0 = static_cast<int>(std::ceil(crossings[k] - 0.5));
      int c1 = static_cast<int>(std::ceil(crossings[k + 1] - 0.5)) - 1;
      c0 = std::max(c0, 0);
      c1 = std::min(c1, kGridSize - 1);
      if (c0 > c1) continue;
      uint8_t* row = grid->data() + static_cast<size_t>(r) * kGridSize;
      std::fill(row + c0, row + c1 + 1, uint8_t{1});
    }
  }
}

void fill_polygon_world(Grid* grid, const Pose& ego, const std::vector<Vec2>& poly) {
  std::vector<GridCoord> g(poly.size());
  bool any_near = false;
  for (size_t i = 0; i < poly.size(); ++i) {
    g[i] = world_to_grid_continuous(ego, poly[i]);
    any_near |= g[i].u > -200 && g[i].u < 400 && g[i].v > -200 && g[i].v < 400;
  }
  if (!any_near) return;
  fill_polygon(grid, g);
}

void fill_obb_world(Grid* grid, const Pose& ego, const Obb& box) {
  Vec2 corners[4];
  box.corners(corners);
  fill_polygon_world(grid, ego, {corners[0], corners[1], corners[2], corners[3]});
}

namespace {

inline void stamp(Grid* grid, int r, int c, int half_width) {
  for (int dr = -half_width; dr <= half_width; ++dr) {
    const int rr = r + dr;
    if (rr < 0 || rr >= kGridSize) continue;
    for (int dc = -half_width; dc <= half_width; ++dc) {
      const int cc = c + dc;
      if (cc < 0 || cc >= kGridSize) continue;
      grid->set(rr, cc);
    }
  }
}

// A cell is crossed iff the segment intersects its half-open square
// [c, c+1) x [r, r+1) after the epsilon nudge. Unlike stepping traversals,
// this predicate is invariant under subdividing the segment, which makes the
// stroke independent of how the polyline was sampled. fn(row, col, t_entry).
template <typename Fn>
void crossed_cells(const GridCoord& a, const GridCoord& b, Fn&& fn) {
  const double x0 = a.u + kGridSnapEps, y0 = a.v + kGridSnapEps;
  const double x1 = b.u + kGridSnapEps, y1 = b.v + kGridSnapEps;
  const double dx = x1 - x0, dy = y1 - y0;
  const int cx0 = static_cast<int>(std::floor(std::min(x0, x1)));
  const int cx1 = static_cast<int>(std::floor(std::max(x0, x1)));
  const int cy0 = static_cast<int>(std::floor(std::min(y0, y1)));
  const int cy1 = static_cast<int>(std::floor(std::max(y0, y1)));
  constexpr double kShrink = 1e-12;  // half-open upper edges
  for (int r = cy0; r <= cy1; ++r) {
    for (int c = cx0; c <= cx1; ++c) {
      // Liang-Barsky clip of the segment against the cell box.
      double t0 = 0.0, t1 = 1.0;
      bool ok = true;
      const double lo[2] = {static_cast<double>(c), static_cast<double>(r)};
      const double hi[2] = {c + 1.0 - kShrink, r + 1.0 - kShrink};
      const double p0[2] = {x0, y0};
      const double d[2] = {dx, dy};
      for (int axis = 0; axis < 2 && ok; ++axis) {
        if (d[axis] == 0.0) {
          if (p0[axis] < lo[axis] || p0[axis] > hi[axis]) ok = false;
          continue;
        }
        double ta = (lo[axis] - p0[axis]) / d[axis];
        double tb = (hi[axis] - p0[axis]) / d[axis];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) ok = false;
      }
      if (ok) fn(r, c, t0);
    }
  }
}

}  // namespace

void stroke_polyline_world(Grid* grid, const Pose& ego, const std::vector<Vec2>& pts,
                           int half_width_cells, double dash_on_m, double dash_off_m) {
  if (pts.empty()) return;
  if (pts.size() == 1) {
    if (auto cell = world_to_grid(ego, pts[0])) stamp(grid, cell->row, cell->col, half_width_cells);
    return;
  }
  const double period = dash_on_m + dash_off_m;
  const double margin = (half_width_cells + 1);
  double s = 0.0;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const GridCoord ga = world_to_grid_continuous(ego, pts[i]);
    const GridCoord gb = world_to_grid_continuous(ego, pts[i + 1]);
    const double seg_len = (pts[i + 1] - pts[i]).norm();
    const bool outside =
        (ga.u < -margin && gb.u < -margin) || (ga.u >= kGridSize + margin && gb.u >= kGridSize + margin) ||
        (ga.v < -margin && gb.v < -margin) || (ga.v >= kGridSize + margin && gb.v >= kGridSize + margin);
    if (!outside && seg_len > 0.0) {
      // Chunk long segments so the per-cell bbox scan stays near-linear; the
      // crossing predicate is subdivision-invariant, so chunking is free.
      const double extent = std::max(std::abs(ga.u - gb.u), std::abs(ga.v - gb.v));
      const int chunks = std::max(1, static_cast<int>(std::ceil(extent / 4.0)));
      for (int k = 0; k < chunks; ++k) {
        const double f0 = static_cast<double>(k) / chunks;
        const double f1 = static_cast<double>(k + 1) / chunks;
        const GridCoord ca{ga.u + (gb.u - ga.u) * f0, ga.v + (gb.v - ga.v) * f0};
        const GridCoord cb{ga.u + (gb.u - ga.u) * f1, ga.v + (gb.v - ga.v) * f1};
        crossed_cells(ca, cb, [&](int r, int c, double t) {
          const double arc = s + (f0 + t * (f1 - f0)) * seg_len;
          if (period > 0.0 && std::fmod(arc, period) >= dash_on_m) return;
          stamp(grid, r, c, half_width_cells);
        });
      }
    }
    s += seg_len;
  }
}

void render_static_channels(const world::TownMap& town, const world::LaneIndex& index,
                            const Pose& ego, Grid* road, Grid* lane_lines) {
  road->clear();
  lane_lines->clear();
  const double radius = std::hypot(kAheadM + 2.0, kLateralHalfM + 2.0);
  const Vec2 center = ego.position();

  for (int32_t jid : index.junctions_near(center, radius)) {
    fill_polygon_world(road, ego, town.junctions[static_cast<size_t>(jid)].box);
  }
  for (int32_t id : index.lanes_near(center, radius)) {
    const world::LaneSegment& lane = town.lane(id);
    fill_polygon_world(road, ego, lane.polygon());
    auto stroke_boundary = [&](const std::vector<Vec2>& pts, world::BoundaryKind kind) {
      if (kind == world::BoundaryKind::None) return;
      if (kind == world::BoundaryKind::Dashed) {
        // 2 cells on / 2 cells off
        stroke_polyline_world(lane_lines, ego, pts, 0, 2.0 * kCellM, 2.0 * kCellM);
      } else {
        stroke_polyline_world(lane_lines, ego, pts, 0);
      }
    };
    stroke_boundary(lane.left_boundary, lane.left_kind);
    stroke_boundary(lane.right_boundary, lane.right_kind);
  }
}

Snapshot make_snapshot(const world::World& w) {
  Snapshot snap;
  snap.valid = true;
  snap.actors.reserve(w.actors().size() - 1);
  for (size_t i = 1; i < w.actors().size(); ++i) {
    const world::ActorState& a = w.actors()[i];
    snap.actors.push_back({a.pose, a.half_extents, a.kind});
  }
  snap.light_red.reserve(w.lights().size());
  for (const world::TrafficLight& l : w.lights()) {
    snap.light_red.push_back(l.phase() == world::LightPhase::Red ? 1 : 0);
  }
  snap.ego_affected_gt = w.ego_in_active_stop_zone();
  return snap;
}

void HistoryBuffer::reset(const Snapshot& initial) {
  ring_.assign(static_cast<size_t>(stride_) * 3 + 1, initial);
  head_ = 0;
  count_ = ring_.size();
}

void HistoryBuffer::push(Snapshot snap) {
  if (ring_.empty()) {
    reset(snap);
    return;
  }
  head_ = (head_ + 1) % ring_.size();
  ring_[head_] = std::move(snap);
  count_ = std::min(count_ + 1, ring_.size());
}

const Snapshot& HistoryBuffer::slot(int slot_index) const {
  static const Snapshot kInvalid{};
  const size_t back = static_cast<size_t>(slot_index) * stride_;
  if (ring_.empty() || back >= count_) return kInvalid;
  const size_t idx = (head_ + ring_.size() - back) % ring_.size();
  return ring_[idx];
}

void render_dynamic_channels(const HistoryBuffer& history,
                             const std::vector<world::TrafficLight>& lights, const Pose& ego,
                             std::array<Grid, 12>* out) {
  for (Grid& g : *out) g.clear();
  for (int k = 0; k < 4; ++k) {
    const Snapshot& snap = history.slot(k);
    if (!snap.valid) continue;
    Grid& veh = (*out)[static_cast<size_t>(k)];
    Grid& ped = (*out)[static_cast<size_t>(4 + k)];
    Grid& stop = (*out)[static_cast<size_t>(8 + k)];
    for (const ActorSnap& a : snap.actors) {
      Grid* target = a.kind == world::ActorKind::Vehicle ? &veh
                     : a.kind == world::ActorKind::Pedestrian ? &ped
                                                              : nullptr;
      if (!target) continue;
      fill_obb_world(target, ego, Obb{{a.pose.x, a.pose.y}, a.pose.heading, a.half_extents});
    }
    for (size_t li = 0; li < lights.size() && li < snap.light_red.size(); ++li) {
      if (snap.light_red[li]) fill_obb_world(&stop, ego, lights[li].stop_zone);
    }
  }
}

uint64_t grid_hash(const Grid& g, uint64_t h) {
  return fnv1a64(g.data(), g.cells.size(), h);
}

}  // namespace bevdrive::bev
