#pragma once

#include <functional>
#include <memory>
#include <string>

#include "bevdrive/bev/grid.hpp"
#include "bevdrive/nn/adam.hpp"
#include "bevdrive/nn/layers.hpp"
#include "bevdrive/route/route.hpp"
#include "bevdrive/world/town_gen.hpp"

namespace bevdrive::route {

// Learned desired-route model over the toy 48x48 frame: a conv + token
// self-attention encoder over the (road, lane-line) masks, an MLP waypoint
// encoder whose embeddings query the mask tokens through cross-attention,
// and a conv head decoding tokens + attention maps back to a route mask.
struct PredictorConfig {
  int input_side = 48;      // 4x downsample of the BEV frame
  int token_side = 8;       // 8x8 = 64 tokens of 6x6 input cells
  int embed_dim = 64;
  int heads = 2;
  int waypoints = 5;
  float waypoint_scale = 1.0f / 40.0f;  // meters -> roughly unit range
};

class RoutePredictor {
 public:
  explicit RoutePredictor(const PredictorConfig& cfg = {}, uint64_t seed = 1);

  // masks: (B, 2, 48, 48) road+lane occupancies in [0,1];
  // waypoints: (B, 5, 2) ego-local meters. Returns (B, 1, 48, 48) in [0,1].
  nn::Tensor forward(const nn::Tensor& masks, const nn::Tensor& waypoints);
  void backward(const nn::Tensor& d_pred);

  std::vector<nn::ParamRef<float>> params();
  void zero_grad();
  std::vector<nn::LayerSpec> specs() const;
  const PredictorConfig& config() const { return cfg_; }

  void save(const std::string& path) const;
  static std::unique_ptr<RoutePredictor> load(const std::string& path);

  // Full-frame convenience: pools the 192 masks to 48, runs the model, then
  // upsamples the probability map and binarizes at the threshold.
  void predict_route_grid(const bev::Grid& road, const bev::Grid& lanes,
                          const WaypointSet& waypoints, double threshold,
                          bev::Grid* out) const;

 private:
  PredictorConfig cfg_;
  // encoder
  nn::Conv2d<float> enc1_;
  nn::ReLU<float> enc1_act_;
  nn::Conv2d<float> enc2_;
  nn::ReLU<float> enc2_act_;
  nn::SelfAttention<float> token_attn_;
  // waypoint encoder
  nn::Dense<float> wp1_;
  nn::ReLU<float> wp1_act_;
  nn::Dense<float> wp2_;
  // fusion
  nn::CrossAttention<float> cross_;
  // head
  nn::Conv2d<float> head1_;
  nn::ReLU<float> head1_act_;
  nn::UpsampleNearest<float> up2_;
  nn::Conv2d<float> head2_;
  nn::ReLU<float> head2_act_;
  nn::UpsampleNearest<float> up3_;
  nn::Conv2d<float> head3_;
  nn::ReLU<float> head3_act_;
  nn::Conv2d<float> head_out_;
  nn::Sigmoid<float> out_act_;

  int cached_batch_ = 0;
  nn::Tensor cached_cross_out_;  // (B, 5, D)
};

// ---------------------------------------------------------------------------
// Training data: records referencing a compact town table, stored in a
// length-prefixed binary container (magic "BVRD").
// ---------------------------------------------------------------------------

struct RouteDatasetRecord {
  int32_t town_index = 0;
  Pose ego;
  std::array<Vec2, 5> waypoints_local;
  std::array<uint8_t, 48 * 48> oracle_mask;
};

struct RouteDataset {
  struct TownKey {
    uint64_t seed;
    world::TownSpec spec;
  };
  std::vector<TownKey> towns;
  std::vector<RouteDatasetRecord> records;

  void save(const std::string& path) const;
  static RouteDataset load(const std::string& path);
};

struct DatasetGenConfig {
  int samples = 10000;
  int town_count = 12;
  uint64_t seed = 1;
  world::TownSpec town_spec;      // varied junction fractions derive from it
  bool straight_lanes_only = false;  // single-straight-lane curriculum subset
};

RouteDataset generate_route_dataset(const DatasetGenConfig& cfg);

// Renders the (road48, lanes48) inputs for one record.
void dataset_inputs(const world::TownMap& town, const world::LaneIndex& index,
                    const RouteDatasetRecord& rec, float* masks_out /* 2*48*48 */);

struct TrainConfig {
  int epochs = 12;
  int batch_size = 32;
  float learning_rate = 1e-3f;
  float pos_weight = 4.0f;
  double val_fraction = 0.1;
  double target_iou = 0.0;  // early stop when the validation IoU passes this
  uint64_t seed = 7;
  double max_seconds = 1800.0;
};

struct TrainReport {
  std::vector<float> epoch_losses;
  double val_iou = 0.0;
  int epochs_run = 0;
};

TrainReport train_route_predictor(RoutePredictor* model, const RouteDataset& dataset,
                                  const TrainConfig& cfg,
                                  const std::function<void(int, float, double)>& on_epoch);

// Mean IoU of thresholded predictions against the oracle masks.
double evaluate_route_predictor(const RoutePredictor& model, const RouteDataset& dataset,
                                size_t begin, size_t end, double threshold);

}  // namespace bevdrive::route
