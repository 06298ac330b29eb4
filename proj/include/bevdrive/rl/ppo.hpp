#pragma once

#include <cstdint>
#include <vector>

#include "bevdrive/nn/adam.hpp"
#include "bevdrive/rl/policy_net.hpp"

namespace bevdrive::rl {

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  float clip_ratio = 0.2f;
  int epochs = 4;
  int minibatch = 256;
  float value_coef = 0.5f;
  float entropy_coef = 0.01f;
  float learning_rate = 3e-4f;
  float max_grad_norm = 0.5f;  // 0 disables clipping
  float log_std_min = -2.0f;   // exploration floor
  float log_std_max = 0.5f;
  bool normalize_rewards = true;  // scale by the running std of returns
  int rollout_len = 512;
  int num_envs = 8;
  int64_t total_steps = 300000;
};

// Running scale estimate over per-env discounted returns; rewards handed to
// GAE are divided by the return std so value targets stay O(1).
class RewardNormalizer {
 public:
  explicit RewardNormalizer(int num_envs, double gamma)
      : gamma_(gamma), running_returns_(static_cast<size_t>(num_envs), 0.0) {}

  float normalize(int env_index, float reward, bool done);
  double scale() const;

 private:
  double gamma_;
  std::vector<double> running_returns_;
  int64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Flattened on-policy batch; index = t * num_envs + env.
struct RolloutBatch {
  int t_len = 0;
  int num_envs = 0;
  int bev_dim = 0;
  int meas_dim = 0;
  std::vector<float> bev;      // (T*N, bev_dim) pooled observation planes
  std::vector<float> meas;     // (T*N, meas_dim)
  std::vector<float> actions;  // (T*N, 2)
  std::vector<float> z;        // (T*N, 2) pre-squash samples
  std::vector<float> log_probs;
  std::vector<float> rewards;
  std::vector<float> values;
  std::vector<uint8_t> dones;
  std::vector<float> bootstrap_values;  // (N)

  int size() const { return t_len * num_envs; }
  void resize(int t, int n, int bev_d, int meas_d);
};

struct LossReport {
  float policy_loss = 0.0f;
  float value_loss = 0.0f;
  float entropy = 0.0f;
  float kl = 0.0f;
  float clip_fraction = 0.0f;
  bool aborted_non_finite = false;
};

// Computes GAE advantages/returns for the batch (column-wise per env).
void compute_advantages(const RolloutBatch& batch, const PpoConfig& cfg,
                        std::vector<float>* advantages, std::vector<float>* returns);

// Clipped-surrogate update over the batch. Restores the previous parameters
// and reports aborted_non_finite when a non-finite loss appears.
LossReport ppo_update(const RolloutBatch& batch, PolicyValueNet* net, nn::Adam* optimizer,
                      const PpoConfig& cfg, Rng* rng);

}  // namespace bevdrive::rl
