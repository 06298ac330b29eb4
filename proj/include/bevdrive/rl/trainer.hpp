#pragma once

#include <functional>

#include "bevdrive/rl/ppo.hpp"

namespace bevdrive::rl {

// Environment surface the trainer collects from. Observations arrive as
// pooled float planes plus the measurement row; done environments reset
// themselves and return the fresh observation.
class VecEnv {
 public:
  virtual ~VecEnv() = default;
  virtual int num_envs() const = 0;
  virtual int bev_channels() const = 0;
  virtual int grid_side() const = 0;  // pooled side length
  virtual int meas_dim() const = 0;
  virtual void reset_all(float* bev_out, float* meas_out) = 0;

  struct StepInfo {
    float reward = 0.0f;
    bool done = false;
    double episode_return = 0.0;  // valid when done
    int episode_len = 0;
  };
  virtual StepInfo step(int env_index, const float (&action)[kActionDim], float* bev_out,
                        float* meas_out) = 0;

  int bev_dim() const { return bev_channels() * grid_side() * grid_side(); }
};

struct IterationStats {
  int64_t env_steps = 0;   // cumulative
  LossReport loss;
  double mean_episode_return = 0.0;  // over episodes finished this iteration
  double mean_episode_len = 0.0;
  int episodes_finished = 0;
  double steps_per_second = 0.0;
};

// On-policy loop: collect rollout_len * num_envs steps, update, repeat until
// total_steps. Returns the number of environment steps executed.
int64_t train(VecEnv* env, PolicyValueNet* net, nn::Adam* optimizer, const PpoConfig& cfg,
              uint64_t seed, const std::function<void(const IterationStats&)>& on_iteration);

}  // namespace bevdrive::rl
