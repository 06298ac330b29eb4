#pragma once

#include <vector>

#include "bevdrive/bev/raster.hpp"
#include "bevdrive/variant.hpp"

namespace bevdrive::bev {

// Channel layout: 0 road, 1 desired route, 2 lane lines, 3-6 vehicles,
// 7-10 pedestrians, 11-14 stop zones (newest first in each block).
constexpr int kChRoad = 0;
constexpr int kChRoute = 1;
constexpr int kChLanes = 2;
constexpr int kChVehicle0 = 3;
constexpr int kChPedestrian0 = 7;
constexpr int kChStop0 = 11;

// Measurements from the previous step, normalized gear included.
struct MeasurementVector {
  float steering = 0.0f;
  float throttle = 0.0f;
  float brake = 0.0f;
  float gear = 0.0f;  // gear / max gear
  float lateral_speed = 0.0f;
  float longitudinal_speed = 0.0f;

  static constexpr int kSize = 6;
  std::array<float, kSize> as_array() const {
    return {steering, throttle, brake, gear, lateral_speed, longitudinal_speed};
  }
};

MeasurementVector make_measurement(const world::ActorState& ego);

struct Observation {
  std::array<Grid, kChannelCount> channels;
  GridF real_channel1;  // replaces channels[1] when set (heatmap variant)
  bool has_real_channel1 = false;
  std::vector<float> measurements;

  uint64_t hash() const;
};

// Per-variant observation assembly. All variants share the 15-channel shape;
// removed information is zeroed rather than dropped.
class ObservationComposer {
 public:
  explicit ObservationComposer(VariantId variant) : variant_(variant) {}

  struct Inputs {
    const Grid* road = nullptr;
    const Grid* lane_lines = nullptr;
    const Grid* route_mask = nullptr;  // ground-truth or predicted, per variant
    const GridF* heatmap = nullptr;    // TargetHeatmap only
    const HistoryBuffer* history = nullptr;
    const std::vector<world::TrafficLight>* lights = nullptr;
    MeasurementVector measurement;
  };

  // Throws std::invalid_argument when the inputs do not match the variant.
  void compose(const Inputs& in, const Pose& ego, Observation* out) const;

  VariantId variant() const { return variant_; }
  int measurement_size() const {
    return MeasurementVector::kSize + (variant_ == VariantId::MeasurementFlagStop ? 1 : 0);
  }

 private:
  VariantId variant_;
};

// Average-pools every channel into (192/pool)^2 floats per channel, written
// channel-major into out (size 15 * (192/pool)^2).
void pool_observation(const Observation& obs, int pool, float* out);

}  // namespace bevdrive::bev
