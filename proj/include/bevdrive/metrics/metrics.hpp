#pragma once

#include <array>
#include <string>
#include <vector>

#include "bevdrive/geom.hpp"
#include "bevdrive/world/types.hpp"

namespace bevdrive::metrics {

constexpr int kInfractionKinds = 7;

// Multiplicative per-event penalties; kinds without an entry keep IS at 1.
struct PenaltyConfig {
  double collision_pedestrian = 0.50;
  double collision_vehicle = 0.60;
  double collision_static = 0.65;
  double red_light = 0.70;

  double coefficient(world::InfractionKind kind) const {
    switch (kind) {
      case world::InfractionKind::CollisionPedestrian: return collision_pedestrian;
      case world::InfractionKind::CollisionVehicle: return collision_vehicle;
      case world::InfractionKind::CollisionStatic: return collision_static;
      case world::InfractionKind::RedLight: return red_light;
      default: return 1.0;
    }
  }
};

struct EpisodeMetrics {
  double route_completion = 0.0;                 // RC in [0, 1]
  std::array<int, kInfractionKinds> infraction_counts{};
  double infraction_score = 1.0;                 // IS in (0, 1]
  double driving_score = 0.0;                    // DS = RC * IS

  int& count(world::InfractionKind k) { return infraction_counts[static_cast<size_t>(k)]; }
  int count(world::InfractionKind k) const {
    return infraction_counts[static_cast<size_t>(k)];
  }
};

// Covered arclength (monotone-clamped closest-point projection) over total.
double route_completion(const Polyline& route, const std::vector<Vec2>& ego_positions);

double infraction_score(const std::array<int, kInfractionKinds>& counts,
                        const PenaltyConfig& penalties = {});

double driving_score(double rc, double is);

EpisodeMetrics finalize(double rc, const std::array<int, kInfractionKinds>& counts,
                        const PenaltyConfig& penalties = {});

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;  // unbiased (n-1); 0 when n == 1
  int n = 0;
  bool single_run = false;
};

Aggregate aggregate_seeds(const std::vector<double>& values);

}  // namespace bevdrive::metrics
