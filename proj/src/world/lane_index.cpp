#include <algorithm>
#include <cmath>

#include "bevdrive/world/world.hpp"

namespace bevdrive::world {

namespace {
std::pair<Vec2, Vec2> poly_bbox(const std::vector<Vec2>& pts) {
  Vec2 lo = pts.front(), hi = pts.front();
  for (const Vec2& p : pts) {
    lo.x = std::min(lo.x, p.x);
    lo.y = std::min(lo.y, p.y);
    hi.x = std::max(hi.x, p.x);
    hi.y = std::max(hi.y, p.y);
  }
  return {lo, hi};
}
}  // namespace

LaneIndex::LaneIndex(const TownMap& town) {
  Vec2 lo, hi;
  town.bounding_box(&lo, &hi);
  lo = lo - Vec2{5, 5};
  hi = hi + Vec2{5, 5};
  origin_ = lo;
  nx_ = std::max(1, static_cast<int>(std::ceil((hi.x - lo.x) / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil((hi.y - lo.y) / cell_)));
  cells_.resize(static_cast<size_t>(nx_) * ny_);

  auto insert_box = [&](const Vec2& blo, const Vec2& bhi, int32_t id, bool is_lane) {
    const int x0 = std::clamp(static_cast<int>((blo.x - origin_.x) / cell_), 0, nx_ - 1);
    const int x1 = std::clamp(static_cast<int>((bhi.x - origin_.x) / cell_), 0, nx_ - 1);
    const int y0 = std::clamp(static_cast<int>((blo.y - origin_.y) / cell_), 0, ny_ - 1);
    const int y1 = std::clamp(static_cast<int>((bhi.y - origin_.y) / cell_), 0, ny_ - 1);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        Cell& c = cells_[static_cast<size_t>(y) * nx_ + x];
        (is_lane ? c.lanes : c.junctions).push_back(id);
      }
    }
  };

  lane_bbox_.reserve(town.lanes.size());
  for (const LaneSegment& l : town.lanes) {
    auto poly = l.polygon();
    const auto bb = poly_bbox(poly);
    lane_bbox_.push_back(bb);
    insert_box(bb.first, bb.second, l.id, true);
  }
  junction_bbox_.reserve(town.junctions.size());
  for (size_t j = 0; j < town.junctions.size(); ++j) {
    const auto bb = poly_bbox(town.junctions[j].box);
    junction_bbox_.push_back(bb);
    insert_box(bb.first, bb.second, static_cast<int32_t>(j), false);
  }
}

template <typename Fn>
void LaneIndex::visit_cells(const Vec2& p, double radius, Fn&& fn) const {
  const int x0 = std::clamp(static_cast<int>((p.x - radius - origin_.x) / cell_), 0, nx_ - 1);
  const int x1 = std::clamp(static_cast<int>((p.x + radius - origin_.x) / cell_), 0, nx_ - 1);
  const int y0 = std::clamp(static_cast<int>((p.y - radius - origin_.y) / cell_), 0, ny_ - 1);
  const int y1 = std::clamp(static_cast<int>((p.y + radius - origin_.y) / cell_), 0, ny_ - 1);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      fn(cells_[static_cast<size_t>(y) * nx_ + x]);
    }
  }
}

std::vector<int32_t> LaneIndex::lanes_near(const Vec2& p, double radius) const {
  std::vector<int32_t> out;
  visit_cells(p, radius, [&](const Cell& c) {
    for (int32_t id : c.lanes) {
      const auto& bb = lane_bbox_[static_cast<size_t>(id)];
      if (p.x + radius < bb.first.x || p.x - radius > bb.second.x ||
          p.y + radius < bb.first.y || p.y - radius > bb.second.y) {
        continue;
      }
      out.push_back(id);
    }
  });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<int32_t> LaneIndex::junctions_near(const Vec2& p, double radius) const {
  std::vector<int32_t> out;
  visit_cells(p, radius, [&](const Cell& c) {
    for (int32_t id : c.junctions) {
      const auto& bb = junction_bbox_[static_cast<size_t>(id)];
      if (p.x + radius < bb.first.x || p.x - radius > bb.second.x ||
          p.y + radius < bb.first.y || p.y - radius > bb.second.y) {
        continue;
      }
      out.push_back(id);
    }
  });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool LaneIndex::on_road(const TownMap& town, const Vec2& p) const {
  for (int32_t j : junctions_near(p, 0.1)) {
    if (point_in_polygon(p, town.junctions[static_cast<size_t>(j)].box)) return true;
  }
  for (int32_t id : lanes_near(p, 0.1)) {
    if (point_in_polygon(p, town.lane(id).polygon())) return true;
  }
  return false;
}

std::optional<LaneIndex::Snap> LaneIndex::snap(const TownMap& town, const Vec2& p,
                                               double max_dist) const {
  Snap best;
  best.dist = max_dist;
  bool found = false;
  bool best_is_connector = false;
  for (int32_t id : lanes_near(p, max_dist + 2.0)) {
    const LaneSegment& lane = town.lane(id);
    const auto proj = lane.project(p);
    const bool connector = lane.junction_id >= 0;
    const bool better =
        proj.dist < best.dist - 1e-9 ||
        (std::abs(proj.dist - best.dist) <= 1e-9 && best_is_connector && !connector);
    if (proj.dist <= max_dist && (!found || better)) {
      best.lane = id;
      best.s = proj.s;
      best.lateral = proj.lateral;
      best.dist = proj.dist;
      best_is_connector = connector;
      found = true;
    }
  }
  if (!found) return std::nullopt;
  return best;
}

}  // namespace bevdrive::world
