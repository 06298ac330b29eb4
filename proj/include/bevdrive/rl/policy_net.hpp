#pragma once

#include <memory>
#include <vector>

#include "bevdrive/nn/layers.hpp"
#include "bevdrive/rl/dist.hpp"

namespace bevdrive::rl {

// Actor-critic network: a small stride-2 conv trunk over the pooled BEV
// tensor, a dense embedding of the measurement vector, joint trunk, and
// separate action-mean / value heads. log_std is a free parameter.
struct PolicyNetConfig {
  int bev_channels = 15;
  int grid_side = 24;  // pooled resolution fed to the trunk
  std::vector<int> conv_channels = {16, 24, 32, 48};
  int trunk_width = 128;
  int meas_dim = 6;
  int meas_embed = 16;
  float init_log_std = -0.5f;
};

class PolicyValueNet {
 public:
  PolicyValueNet(const PolicyNetConfig& cfg, uint64_t seed);

  struct Output {
    nn::Tensor mu;     // (B, 2)
    nn::Tensor value;  // (B, 1)
  };
  // bev: (B, C, S, S), meas: (B, meas_dim)
  Output forward(const nn::Tensor& bev, const nn::Tensor& meas);
  void backward(const nn::Tensor& dmu, const nn::Tensor& dvalue);

  const nn::Tensor& log_std() const { return log_std_; }
  nn::Tensor& log_std_mut() { return log_std_; }
  nn::Tensor& log_std_grad() { return grad_log_std_; }

  std::vector<nn::ParamRef<float>> params();
  void zero_grad();
  std::vector<nn::LayerSpec> specs() const;
  const PolicyNetConfig& config() const { return cfg_; }

  // Deep-copy / restore of all parameter values (non-finite update rollback).
  std::vector<std::vector<float>> snapshot_params();
  void restore_params(const std::vector<std::vector<float>>& snap);

 private:
  PolicyNetConfig cfg_;
  std::vector<nn::Conv2d<float>> convs_;
  std::vector<nn::ReLU<float>> conv_acts_;
  nn::Flatten<float> flatten_;
  std::unique_ptr<nn::Dense<float>> fc_bev_;
  nn::ReLU<float> act_bev_;
  std::unique_ptr<nn::Dense<float>> fc_meas_;
  nn::ReLU<float> act_meas_;
  std::unique_ptr<nn::Dense<float>> fc_joint_;
  nn::ReLU<float> act_joint_;
  std::unique_ptr<nn::Dense<float>> head_mu_;
  std::unique_ptr<nn::Dense<float>> head_value_;
  nn::Tensor log_std_, grad_log_std_;
  int bev_feat_dim_ = 0;
  int cached_batch_ = 0;
};

}  // namespace bevdrive::rl
