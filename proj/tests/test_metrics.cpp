#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bevdrive/metrics/metrics.hpp"
#include "bevdrive/rng.hpp"

using namespace bevdrive;
using namespace bevdrive::metrics;

TEST_CASE("route completion examples") {
  Polyline route;
  for (double x = 0.0; x <= 120.0; x += 0.2) route.pts.push_back({x, 0.0});
  route.rebuild_arclength();

  // full traverse
  std::vector<Vec2> full;
  for (double x = 0.0; x <= 120.0; x += 1.0) full.push_back({x, 0.3});
  CHECK(route_completion(route, full) == doctest::Approx(1.0).epsilon(1e-3));

  // never moves
  CHECK(route_completion(route, {{0, 0}, {0, 0}}) == doctest::Approx(0.0));

  // 30 m of a 120 m route
  std::vector<Vec2> part;
  for (double x = 0.0; x <= 30.0; x += 1.0) part.push_back({x, -0.2});
  CHECK(route_completion(route, part) == doctest::Approx(0.25).epsilon(1e-3));

  // projection is monotone-clamped: driving backwards never lowers it
  std::vector<Vec2> back = part;
  back.push_back({5.0, 0.0});
  CHECK(route_completion(route, back) == doctest::Approx(0.25).epsilon(1e-3));
}

TEST_CASE("infraction score examples") {
  std::array<int, kInfractionKinds> counts{};
  CHECK(infraction_score(counts) == doctest::Approx(1.0));

  counts[static_cast<size_t>(world::InfractionKind::RedLight)] = 1;
  CHECK(infraction_score(counts) == doctest::Approx(0.70));

  counts = {};
  counts[static_cast<size_t>(world::InfractionKind::CollisionVehicle)] = 2;
  CHECK(infraction_score(counts) == doctest::Approx(0.36));

  // order independence: product over a mixed bag equals the factored form
  counts = {};
  counts[static_cast<size_t>(world::InfractionKind::CollisionPedestrian)] = 1;
  counts[static_cast<size_t>(world::InfractionKind::RedLight)] = 2;
  counts[static_cast<size_t>(world::InfractionKind::CollisionVehicle)] = 1;
  CHECK(infraction_score(counts) == doctest::Approx(0.5 * 0.7 * 0.7 * 0.6));

  // uncounted kinds leave IS at 1
  counts = {};
  counts[static_cast<size_t>(world::InfractionKind::Timeout)] = 5;
  CHECK(infraction_score(counts) == doctest::Approx(1.0));
}

TEST_CASE("driving score examples") {
  CHECK(driving_score(1.0, 1.0) == doctest::Approx(1.0));
  CHECK(driving_score(0.0, 0.5) == doctest::Approx(0.0));
  CHECK(driving_score(0.8, 0.7) == doctest::Approx(0.56));

  const auto m = finalize(0.8, [] {
    std::array<int, kInfractionKinds> c{};
    c[static_cast<size_t>(world::InfractionKind::RedLight)] = 1;
    return c;
  }());
  CHECK(m.driving_score == doctest::Approx(0.8 * 0.7));
  CHECK(m.driving_score <= m.route_completion);
}

TEST_CASE("ds bounded by rc and equal without infractions") {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    std::array<int, kInfractionKinds> counts{};
    for (auto& c : counts) c = static_cast<int>(rng.uniform_int(3));
    const double rc = rng.uniform01();
    const auto m = finalize(rc, counts);
    CHECK(m.driving_score <= m.route_completion + 1e-12);
    CHECK(m.driving_score == doctest::Approx(m.route_completion * m.infraction_score));
  }
  std::array<int, kInfractionKinds> clean{};
  const auto m = finalize(0.67, clean);
  CHECK(m.driving_score == doctest::Approx(0.67));
}

TEST_CASE("aggregate seeds examples") {
  const auto a = aggregate_seeds({0.7, 0.8, 0.9});
  CHECK(a.mean == doctest::Approx(0.8));
  CHECK(a.stddev == doctest::Approx(0.1));
  CHECK(!a.single_run);

  const auto b = aggregate_seeds({0.5, 0.5, 0.5});
  CHECK(b.stddev == doctest::Approx(0.0));

  const auto c = aggregate_seeds({0.42});
  CHECK(c.mean == doctest::Approx(0.42));
  CHECK(c.stddev == doctest::Approx(0.0));
  CHECK(c.single_run);

  CHECK_THROWS(aggregate_seeds({}));
}
