#include <algorithm>
#include <cmath>

#include "bevdrive/bev/raster.hpp"
#include "bevdrive/route/route.hpp"

namespace bevdrive::route {

void render_route_mask(const Route& route, const Pose& ego, bev::Grid* out,
                       const RouteRenderConfig& cfg) {
  out->clear();
  if (route.polyline.pts.empty()) return;
  const int half_width =
      std::max(0, static_cast<int>(std::lround(cfg.stroke_width_m / bev::kCellM)) / 2);
  bev::stroke_polyline_world(out, ego, route.polyline.pts, half_width);
}

void render_target_heatmap(const Vec2& next_wp_local, bev::GridF* out,
                           const RouteRenderConfig& cfg) {
  out->clear();
  // Ego-local (x fwd, y left) -> continuous grid coords.
  const double u = (-next_wp_local.y + bev::kLateralHalfM) / bev::kCellM + bev::kGridSnapEps;
  const double v = (bev::kAheadM - next_wp_local.x) / bev::kCellM + bev::kGridSnapEps;
  // Bump centered on the waypoint cell's center; out-of-grid waypoints clamp
  // onto the nearest boundary cell.
  const int col = std::clamp(static_cast<int>(std::floor(u)), 0, bev::kGridSize - 1);
  const int row = std::clamp(static_cast<int>(std::floor(v)), 0, bev::kGridSize - 1);
  const double sigma_cells = cfg.heatmap_sigma_m / bev::kCellM;
  const int reach = static_cast<int>(std::ceil(sigma_cells * 5.0));
  const int r0 = std::max(0, row - reach), r1 = std::min(bev::kGridSize - 1, row + reach);
  const int c0 = std::max(0, col - reach), c1 = std::min(bev::kGridSize - 1, col + reach);
  const double inv = 1.0 / (2.0 * sigma_cells * sigma_cells);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double d2 = static_cast<double>((r - row)) * (r - row) +
                        static_cast<double>((c - col)) * (c - col);
      out->set(r, c, static_cast<float>(std::exp(-d2 * inv)));
    }
  }
}

}  // namespace bevdrive::route
