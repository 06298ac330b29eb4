#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bevdrive/geom.hpp"
#include "bevdrive/rng.hpp"

using namespace bevdrive;

TEST_CASE("pose frame round trip") {
  Pose p{3.0, -2.0, 0.7};
  Vec2 w{10.0, 5.0};
  const Vec2 back = p.to_world(p.to_local(w));
  CHECK(back.x == doctest::Approx(w.x));
  CHECK(back.y == doctest::Approx(w.y));
}

TEST_CASE("obb contains and overlap") {
  Obb box{{0, 0}, 0.0, {2.0, 1.0}};
  CHECK(box.contains({1.9, 0.9}));
  CHECK(!box.contains({2.1, 0.0}));

  Obb rot{{0, 0}, M_PI / 4, {2.0, 1.0}};
  CHECK(rot.contains(Vec2{1.0, 1.0}));

  Obb a{{0, 0}, 0.0, {1.0, 1.0}};
  Obb b{{1.5, 0}, 0.0, {1.0, 1.0}};
  Obb c{{3.1, 0}, 0.0, {1.0, 1.0}};
  CHECK(obb_overlap(a, b));
  CHECK(!obb_overlap(a, c));
  // symmetry
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    Obb u{{rng.uniform(-5, 5), rng.uniform(-5, 5)}, rng.uniform(-M_PI, M_PI),
          {rng.uniform(0.2, 3), rng.uniform(0.2, 3)}};
    Obb v{{rng.uniform(-5, 5), rng.uniform(-5, 5)}, rng.uniform(-M_PI, M_PI),
          {rng.uniform(0.2, 3), rng.uniform(0.2, 3)}};
    CHECK(obb_overlap(u, v) == obb_overlap(v, u));
  }
}

TEST_CASE("point in polygon half open rule") {
  // Unit square; boundary points land inside on the low-x/low-y side only.
  std::vector<Vec2> sq = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(point_in_polygon({0.5, 0.5}, sq));
  CHECK(!point_in_polygon({1.5, 0.5}, sq));
  const bool left_edge = point_in_polygon({0.0, 0.5}, sq);
  const bool right_edge = point_in_polygon({1.0, 0.5}, sq);
  CHECK(left_edge != right_edge);  // exactly one side claims the edge
}

TEST_CASE("polyline projection and resampling") {
  Polyline line;
  line.pts = {{0, 0}, {10, 0}, {10, 10}};
  line.rebuild_arclength();
  CHECK(line.length() == doctest::Approx(20.0));

  auto proj = line.project({5.0, 2.0});
  CHECK(proj.s == doctest::Approx(5.0));
  CHECK(proj.lateral == doctest::Approx(2.0));  // left of +x travel
  CHECK(proj.dist == doctest::Approx(2.0));

  proj = line.project({12.0, 5.0});
  CHECK(proj.s == doctest::Approx(15.0));
  CHECK(proj.lateral == doctest::Approx(-2.0));  // right of +y travel

  const Polyline rs = resample_polyline(line.pts, 0.2);
  CHECK(rs.length() == doctest::Approx(20.0).epsilon(0.01));
  for (size_t i = 1; i + 1 < rs.pts.size(); ++i) {
    const double d = (rs.pts[i] - rs.pts[i - 1]).norm();
    CHECK(d > 0.19);
    CHECK(d < 0.21);
  }
  const Vec2 p = rs.point_at(10.0);
  CHECK(p.x == doctest::Approx(10.0).epsilon(0.05));
}
