#include "bevdrive/geom.hpp"

#include <algorithm>
#include <limits>

namespace bevdrive {

bool obb_overlap(const Obb& a, const Obb& b) {
  // Separating axis test over the four face normals.
  Vec2 ca[4], cb[4];
  a.corners(ca);
  b.corners(cb);
  const Vec2 axes[4] = {
      Vec2{std::cos(a.heading), std::sin(a.heading)},
      Vec2{-std::sin(a.heading), std::cos(a.heading)},
      Vec2{std::cos(b.heading), std::sin(b.heading)},
      Vec2{-std::sin(b.heading), std::cos(b.heading)},
  };
  for (const Vec2& ax : axes) {
    double amin = std::numeric_limits<double>::max(), amax = -amin;
    double bmin = amin, bmax = -amin;
    for (int i = 0; i < 4; ++i) {
      const double pa = ca[i].dot(ax);
      const double pb = cb[i].dot(ax);
      amin = std::min(amin, pa);
      amax = std::max(amax, pa);
      bmin = std::min(bmin, pb);
      bmax = std::max(bmax, pb);
    }
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  const size_t n = poly.size();
  if (n < 3) return false;
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[j];
    const Vec2& b = poly[i];
    if ((b.y <= p.y) != (a.y <= p.y)) {
      const double x_cross = b.x + (p.y - b.y) * (a.x - b.x) / (a.y - b.y);
      if (x_cross <= p.x) inside = !inside;
    }
  }
  return inside;
}

void Polyline::rebuild_arclength() {
  cum_s.assign(pts.size(), 0.0);
  for (size_t i = 1; i < pts.size(); ++i) {
    cum_s[i] = cum_s[i - 1] + (pts[i] - pts[i - 1]).norm();
  }
}

Vec2 Polyline::point_at(double s) const {
  if (pts.empty()) return {};
  if (pts.size() == 1 || s <= 0.0) return pts.front();
  if (s >= length()) return pts.back();
  const auto it = std::upper_bound(cum_s.begin(), cum_s.end(), s);
  const size_t i = static_cast<size_t>(it - cum_s.begin());
  const double seg = cum_s[i] - cum_s[i - 1];
  const double t = seg > 0 ? (s - cum_s[i - 1]) / seg : 0.0;
  return pts[i - 1] + (pts[i] - pts[i - 1]) * t;
}

double Polyline::heading_at(double s) const {
  if (pts.size() < 2) return 0.0;
  size_t i = 1;
  if (s > 0.0) {
    const auto it = std::upper_bound(cum_s.begin(), cum_s.end(), std::min(s, length() - 1e-9));
    i = std::min(static_cast<size_t>(it - cum_s.begin()), pts.size() - 1);
  }
  const Vec2 d = pts[i] - pts[i - 1];
  return std::atan2(d.y, d.x);
}

Polyline::Projection Polyline::project(const Vec2& p) const {
  Projection best;
  best.dist = std::numeric_limits<double>::max();
  if (pts.size() == 1) {
    best.s = 0.0;
    best.dist = (p - pts[0]).norm();
    best.lateral = best.dist;
    return best;
  }
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i];
    const Vec2 d = pts[i + 1] - a;
    const double len2 = d.norm2();
    const double t = len2 > 0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    const Vec2 q = a + d * t;
    const double dist = (p - q).norm();
    if (dist < best.dist) {
      best.dist = dist;
      best.s = cum_s[i] + t * std::sqrt(len2);
      const double side = d.cross(p - a);
      best.lateral = side >= 0 ? dist : -dist;
    }
  }
  return best;
}

Polyline resample_polyline(const std::vector<Vec2>& pts, double spacing) {
  Polyline src;
  src.pts = pts;
  src.rebuild_arclength();
  Polyline out;
  if (pts.empty()) return out;
  const double total = src.length();
  if (total <= 0.0 || pts.size() == 1) {
    out.pts = {pts.front()};
    out.rebuild_arclength();
    return out;
  }
  const size_t n = std::max<size_t>(2, static_cast<size_t>(std::floor(total / spacing)) + 1);
  out.pts.reserve(n + 1);
  for (size_t i = 0; i < n; ++i) {
    out.pts.push_back(src.point_at(static_cast<double>(i) * spacing));
  }
  if ((out.pts.back() - pts.back()).norm() > 1e-9) out.pts.push_back(pts.back());
  out.rebuild_arclength();
  return out;
}

}  // namespace bevdrive
