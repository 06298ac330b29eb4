#include "bevdrive/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bevdrive::metrics {

double route_completion(const Polyline& route, const std::vector<Vec2>& ego_positions) {
  const double total = route.length();
  if (total <= 0.0) throw std::invalid_argument("route_completion: empty route");
  double covered = 0.0;
  for (const Vec2& p : ego_positions) {
    covered = std::max(covered, route.project(p).s);
  }
  return std::clamp(covered / total, 0.0, 1.0);
}

double infraction_score(const std::array<int, kInfractionKinds>& counts,
                        const PenaltyConfig& penalties) {
  double score = 1.0;
  for (int k = 0; k < kInfractionKinds; ++k) {
    const double coef = penalties.coefficient(static_cast<world::InfractionKind>(k));
    for (int i = 0; i < counts[static_cast<size_t>(k)]; ++i) score *= coef;
  }
  return score;
}

double driving_score(double rc, double is) { return rc * is; }

EpisodeMetrics finalize(double rc, const std::array<int, kInfractionKinds>& counts,
                        const PenaltyConfig& penalties) {
  EpisodeMetrics m;
  m.route_completion = std::clamp(rc, 0.0, 1.0);
  m.infraction_counts = counts;
  m.infraction_score = infraction_score(counts, penalties);
  m.driving_score = driving_score(m.route_completion, m.infraction_score);
  return m;
}

Aggregate aggregate_seeds(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("aggregate_seeds: empty input");
  Aggregate agg;
  agg.n = static_cast<int>(values.size());
  agg.single_run = values.size() == 1;
  double sum = 0.0;
  for (double v : values) sum += v;
  agg.mean = sum / agg.n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
    agg.stddev = std::sqrt(ss / (agg.n - 1));
  }
  return agg;
}

}  // namespace bevdrive::metrics
