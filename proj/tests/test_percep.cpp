#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bevdrive/bev/raster.hpp"
#include "bevdrive/percep/percep.hpp"

using namespace bevdrive;
using namespace bevdrive::percep;

namespace {

// Road-like band mask of the given width through the grid.
bev::Grid band_mask(int half_width_cells, double angle = 0.0) {
  bev::Grid g;
  const double cx = 96.0, cy = 96.0;
  const double nx = -std::sin(angle), ny = std::cos(angle);
  for (int r = 0; r < bev::kGridSize; ++r) {
    for (int c = 0; c < bev::kGridSize; ++c) {
      const double d = (c + 0.5 - cx) * nx + (r + 0.5 - cy) * ny;
      if (std::abs(d) <= half_width_cells) g.set(r, c);
    }
  }
  return g;
}

// Thin-line mask resembling lane boundaries.
bev::Grid lines_mask(int spacing) {
  bev::Grid g;
  for (int c = 20; c < bev::kGridSize - 20; c += spacing) {
    for (int r = 0; r < bev::kGridSize; ++r) g.set(r, c);
  }
  return g;
}

}  // namespace

TEST_CASE("iou examples") {
  bev::Grid a = band_mask(10);
  CHECK(iou(a, a) == doctest::Approx(1.0));

  bev::Grid empty1, empty2;
  CHECK(iou(empty1, empty2) == doctest::Approx(1.0));

  bev::Grid left, right;
  for (int r = 0; r < 50; ++r) {
    left.set(r, 10);
    right.set(r, 100);
  }
  CHECK(iou(left, right) == doctest::Approx(0.0));

  // a strictly inside b with half of b's area
  bev::Grid inner, outer;
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < 10; ++c) inner.set(r, c);
  }
  for (int r = 0; r < 40; ++r) {
    for (int c = 0; c < 20; ++c) outer.set(r, c);
  }
  CHECK(iou(inner, outer) == doctest::Approx(0.5));

  // symmetry on random masks
  Rng rng(3);
  bev::Grid x, y;
  for (size_t i = 0; i < x.cells.size(); ++i) {
    x.cells[i] = rng.bernoulli(0.2);
    y.cells[i] = rng.bernoulli(0.4);
  }
  CHECK(iou(x, y) == doctest::Approx(iou(y, x)));
}

TEST_CASE("degrade_to_iou: identity at target 1.0") {
  const bev::Grid mask = band_mask(10);
  DegradationProfile profile;
  profile.target_iou = 1.0;
  Rng rng(5);
  const auto res = degrade_to_iou(mask, profile, 0.0, rng);
  CHECK(!res.unattainable);
  CHECK(res.achieved_iou == doctest::Approx(1.0));
  CHECK(bev::grid_hash(res.mask) == bev::grid_hash(mask));
}

TEST_CASE("degrade_to_iou hits the calibration targets") {
  Rng rng(7);
  // road-class target
  {
    DegradationProfile profile;
    profile.target_iou = 0.924;
    double acc = 0.0;
    const int trials = 25;
    for (int i = 0; i < trials; ++i) {
      const bev::Grid mask = band_mask(8 + static_cast<int>(rng.uniform_int(20)),
                                       rng.uniform(-0.6, 0.6));
      const auto res = degrade_to_iou(mask, profile, 0.0, rng);
      CHECK(!res.unattainable);
      CHECK(res.achieved_iou >= 0.904);
      CHECK(res.achieved_iou <= 0.944);
      acc += res.achieved_iou;
    }
    CHECK(acc / trials == doctest::Approx(0.924).epsilon(0.02));
  }
  // lane-line-class target on thin structures
  {
    DegradationProfile profile;
    profile.target_iou = 0.756;
    for (int i = 0; i < 25; ++i) {
      const bev::Grid mask = lines_mask(9 + static_cast<int>(rng.uniform_int(12)));
      const auto res = degrade_to_iou(mask, profile, 0.0, rng);
      CHECK(!res.unattainable);
      CHECK(res.achieved_iou >= 0.736);
      CHECK(res.achieved_iou <= 0.776);
    }
  }
}

TEST_CASE("degrade_to_iou: empty mask with target < 1 is flagged") {
  bev::Grid empty;
  DegradationProfile profile;
  profile.target_iou = 0.9;
  Rng rng(9);
  const auto res = degrade_to_iou(empty, profile, 0.0, rng);
  CHECK(res.unattainable);
  CHECK(bev::grid_hash(res.mask) == bev::grid_hash(empty));
}

TEST_CASE("degradation is monotone non-increasing in deviation") {
  DegradationProfile profile;
  profile.target_iou = 0.924;
  profile.ood_multiplier = 1.0;
  Rng rng(11);
  double prev_mean = 1.0;
  for (const double dev : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    double acc = 0.0;
    const int trials = 20;
    for (int i = 0; i < trials; ++i) {
      const bev::Grid mask = band_mask(12, rng.uniform(-0.5, 0.5));
      acc += degrade_to_iou(mask, profile, dev, rng).achieved_iou;
    }
    const double mean = acc / trials;
    CHECK(mean <= prev_mean + 0.01);
    prev_mean = mean;
  }
}

TEST_CASE("stop classifier: perfect rates track ground truth") {
  StopClassifierSim sim({.tpr = 1.0, .fpr = 0.0, .threshold = 0.4, .latency_steps = 0});
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    const bool gt = rng.bernoulli(0.5);
    CHECK(sim.simulate(gt, rng) == gt);
    CHECK((sim.last_probability() >= 0.4) == gt);
  }
}

TEST_CASE("stop classifier: empirical rates within 0.01 over 1e5 samples") {
  StopClassifierSim sim({.tpr = 0.95, .fpr = 0.02, .threshold = 0.4, .latency_steps = 0});
  Rng rng(17);
  int tp = 0, pos = 0, fp = 0, neg = 0;
  for (int i = 0; i < 100000; ++i) {
    const bool gt = rng.bernoulli(0.5);
    const bool out = sim.simulate(gt, rng);
    if (gt) {
      ++pos;
      tp += out;
    } else {
      ++neg;
      fp += out;
    }
  }
  CHECK(static_cast<double>(tp) / pos == doctest::Approx(0.95).epsilon(0.011));
  CHECK(static_cast<double>(fp) / neg == doctest::Approx(0.02).epsilon(0.5));
  CHECK(std::abs(static_cast<double>(fp) / neg - 0.02) < 0.01);
}

TEST_CASE("stop classifier: latency delays the flip by exactly L steps") {
  StopClassifierSim sim({.tpr = 1.0, .fpr = 0.0, .threshold = 0.4, .latency_steps = 2});
  Rng rng(19);
  std::vector<bool> gt(20, false);
  for (size_t i = 10; i < gt.size(); ++i) gt[i] = true;
  std::vector<bool> out;
  for (const bool g : gt) out.push_back(sim.simulate(g, rng));
  for (size_t i = 0; i < out.size(); ++i) {
    const bool expected = i < 12 ? false : true;  // flip at t=10 emerges at t=12
    CHECK(out[i] == expected);
  }
}
