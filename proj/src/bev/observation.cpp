#include "bevdrive/bev/observation.hpp"

#include <cstring>
#include <stdexcept>

#include "bevdrive/kern/kernels.hpp"
#include "bevdrive/serial.hpp"

namespace bevdrive::bev {

namespace {
constexpr double kMaxGear = 5.0;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("observation compose: ") + what);
}
}  // namespace

MeasurementVector make_measurement(const world::ActorState& ego) {
  MeasurementVector m;
  m.steering = static_cast<float>(ego.steer);
  m.throttle = static_cast<float>(ego.throttle);
  m.brake = static_cast<float>(ego.brake);
  m.gear = static_cast<float>(ego.gear / kMaxGear);
  m.lateral_speed = static_cast<float>(ego.lat_speed);
  m.longitudinal_speed = static_cast<float>(ego.lon_speed);
  return m;
}

uint64_t Observation::hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const Grid& g : channels) h = grid_hash(g, h);
  if (has_real_channel1) {
    h = fnv1a64(real_channel1.cells.data(), real_channel1.cells.size() * sizeof(float), h);
  }
  h = fnv1a64(measurements.data(), measurements.size() * sizeof(float), h);
  return h;
}

void ObservationComposer::compose(const Inputs& in, const Pose& ego, Observation* out) const {
  require(in.history != nullptr, "history buffer is required");
  require(in.lights != nullptr, "lights are required");
  const bool wants_heatmap = variant_ == VariantId::TargetHeatmap;
  require(wants_heatmap == (in.heatmap != nullptr),
          "heatmap input must be present exactly for the TargetHeatmap variant");
  if (variant_ != VariantId::TargetHeatmap) {
    require(in.route_mask != nullptr, "route mask is required");
  }
  if (variant_ != VariantId::NoStatic) {
    require(in.road != nullptr && in.lane_lines != nullptr, "static channels are required");
  }

  // Static block.
  if (variant_ == VariantId::NoStatic) {
    out->channels[kChRoad].clear();
    out->channels[kChLanes].clear();
  } else {
    out->channels[kChRoad] = *in.road;
    out->channels[kChLanes] = *in.lane_lines;
  }

  // Route channel.
  out->has_real_channel1 = false;
  if (variant_ == VariantId::TargetHeatmap) {
    out->channels[kChRoute].clear();
    out->real_channel1 = *in.heatmap;
    out->has_real_channel1 = true;
  } else {
    out->channels[kChRoute] = *in.route_mask;
  }

  // Dynamic block.
  std::array<Grid, 12> dynamic;
  render_dynamic_channels(*in.history, *in.lights, ego, &dynamic);
  for (int k = 0; k < 4; ++k) {
    out->channels[static_cast<size_t>(kChVehicle0 + k)] = dynamic[static_cast<size_t>(k)];
    out->channels[static_cast<size_t>(kChPedestrian0 + k)] = dynamic[static_cast<size_t>(4 + k)];
  }

  const bool binary_stop =
      variant_ == VariantId::GtBinaryStop || variant_ == VariantId::PredictedBinaryStop;
  for (int k = 0; k < 4; ++k) {
    Grid& stop = out->channels[static_cast<size_t>(kChStop0 + k)];
    if (binary_stop) {
      const Snapshot& snap = in.history->slot(k);
      const bool affected = snap.valid && (variant_ == VariantId::GtBinaryStop
                                               ? snap.ego_affected_gt
                                               : snap.ego_affected_pred);
      if (affected) {
        stop.cells.fill(1);
      } else {
        stop.clear();
      }
    } else if (variant_ == VariantId::MeasurementFlagStop) {
      stop.clear();
    } else {
      stop = dynamic[static_cast<size_t>(8 + k)];
    }
  }

  const auto meas = in.measurement.as_array();
  out->measurements.assign(meas.begin(), meas.end());
  if (variant_ == VariantId::MeasurementFlagStop) {
    const Snapshot& now = in.history->slot(0);
    out->measurements.push_back(now.valid && now.ego_affected_gt ? 1.0f : 0.0f);
  }
}

void pool_observation(const Observation& obs, int pool, float* out) {
  const int side = kGridSize / pool;
  const size_t plane = static_cast<size_t>(side) * side;
  const float scale = 1.0f / static_cast<float>(pool * pool);
  for (int ch = 0; ch < kChannelCount; ++ch) {
    float* dst = out + static_cast<size_t>(ch) * plane;
    if (ch == kChRoute && obs.has_real_channel1) {
      for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
          float acc = 0.0f;
          for (int dr = 0; dr < pool; ++dr) {
            const float* src =
                obs.real_channel1.cells.data() + static_cast<size_t>(r * pool + dr) * kGridSize +
                static_cast<size_t>(c) * pool;
            for (int dc = 0; dc < pool; ++dc) acc += src[dc];
          }
          dst[static_cast<size_t>(r) * side + c] = acc * scale;
        }
      }
    } else {
      kern::ops().pool_sum_u8(obs.channels[static_cast<size_t>(ch)].data(), kGridSize, kGridSize,
                              pool, scale, dst);
    }
  }
}

}  // namespace bevdrive::bev
