#include <cmath>

#include "bevdrive/route/route.hpp"

namespace bevdrive::route {

namespace {
constexpr double kDegToRad = M_PI / 180.0;
}

Vec2 gnss_to_local(const GnssCoord& target, const GnssCoord& ego_gnss, double ego_heading) {
  const double east = (target.longitude - ego_gnss.longitude) * kDegToRad * kEarthRadiusM *
                      std::cos(ego_gnss.latitude * kDegToRad);
  const double north = (target.latitude - ego_gnss.latitude) * kDegToRad * kEarthRadiusM;
  // World frame is east-x / north-y; rotate into ego (x forward, y left).
  const double c = std::cos(ego_heading), s = std::sin(ego_heading);
  return {c * east + s * north, -s * east + c * north};
}

GnssCoord local_to_gnss(const Vec2& local, const GnssCoord& ego_gnss, double ego_heading) {
  const double c = std::cos(ego_heading), s = std::sin(ego_heading);
  const double east = c * local.x - s * local.y;
  const double north = s * local.x + c * local.y;
  GnssCoord out = ego_gnss;
  out.longitude =
      ego_gnss.longitude + east / (kEarthRadiusM * std::cos(ego_gnss.latitude * kDegToRad)) / kDegToRad;
  out.latitude = ego_gnss.latitude + north / kEarthRadiusM / kDegToRad;
  return out;
}

GnssCoord gnss_from_world(const Vec2& world) {
  return local_to_gnss(world, {kAnchorLongitudeDeg, kAnchorLatitudeDeg, 0.0}, 0.0);
}

Vec2 world_from_gnss(const GnssCoord& gnss) {
  return gnss_to_local(gnss, {kAnchorLongitudeDeg, kAnchorLatitudeDeg, 0.0}, 0.0);
}

}  // namespace bevdrive::route
