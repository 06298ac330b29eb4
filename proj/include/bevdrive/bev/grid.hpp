#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "bevdrive/geom.hpp"

namespace bevdrive::bev {

// Grid geometry: 192 x 192 cells of 0.2 m covering 38.4 m per side, with the
// ego laterally centered, 8 m above the bottom edge and 30.4 m of preview.
constexpr int kGridSize = 192;
constexpr double kCellM = 0.2;
constexpr double kAheadM = 30.4;
constexpr double kBehindM = 8.0;
constexpr double kLateralHalfM = 19.2;
constexpr int kEgoRow = 152;
constexpr int kEgoCol = 96;
constexpr int kChannelCount = 15;

static_assert(kGridSize * kCellM - (kAheadM + kBehindM) < 1e-12 &&
              (kAheadM + kBehindM) - kGridSize * kCellM < 1e-12);

struct Grid {
  std::array<uint8_t, kGridSize * kGridSize> cells{};

  uint8_t at(int row, int col) const { return cells[static_cast<size_t>(row) * kGridSize + col]; }
  void set(int row, int col, uint8_t v = 1) {
    cells[static_cast<size_t>(row) * kGridSize + col] = v;
  }
  void clear() { cells.fill(0); }
  const uint8_t* data() const { return cells.data(); }
  uint8_t* data() { return cells.data(); }
  size_t count() const {
    size_t n = 0;
    for (uint8_t c : cells) n += c;
    return n;
  }
};

struct GridF {
  std::array<float, kGridSize * kGridSize> cells{};
  float at(int row, int col) const { return cells[static_cast<size_t>(row) * kGridSize + col]; }
  void set(int row, int col, float v) { cells[static_cast<size_t>(row) * kGridSize + col] = v; }
  void clear() { cells.fill(0.0f); }
};

// Continuous grid coordinates of a world point in the ego-anchored frame.
// u grows to the ego's right, v grows toward the rear (row 0 = far ahead).
struct GridCoord {
  double u = 0.0;
  double v = 0.0;
};

inline GridCoord world_to_grid_continuous(const Pose& ego, const Vec2& world) {
  const Vec2 local = ego.to_local(world);  // x forward, y left
  const double lateral_right = -local.y;
  return {(lateral_right + kLateralHalfM) / kCellM, (kAheadM - local.x) / kCellM};
}

struct Cell {
  int row = 0;
  int col = 0;
};

// Nudge that keeps floor() faithful to exact-real cell boundaries in the face
// of division round-off (19.2 / 0.2 must land on 96, not 95.999...).
constexpr double kGridSnapEps = 1e-9;

// Floor-discretized cell, or nullopt when the point leaves the grid
// (upper bounds exclusive).
inline std::optional<Cell> world_to_grid(const Pose& ego, const Vec2& world) {
  const GridCoord g = world_to_grid_continuous(ego, world);
  const double u = g.u + kGridSnapEps;
  const double v = g.v + kGridSnapEps;
  if (u < 0.0 || u >= kGridSize || v < 0.0 || v >= kGridSize) return std::nullopt;
  return Cell{static_cast<int>(std::floor(v)), static_cast<int>(std::floor(u))};
}

}  // namespace bevdrive::bev
