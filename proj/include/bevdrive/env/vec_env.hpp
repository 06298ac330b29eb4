#pragma once

#include "bevdrive/env/environment.hpp"
#include "bevdrive/rl/trainer.hpp"

namespace bevdrive::env {

// Adapter binding N driving environments to the PPO trainer: scenarios are
// drawn from a deterministic per-env seed stream and observations arrive
// average-pooled to the policy resolution.
class DrivingVecEnv : public rl::VecEnv {
 public:
  struct Config {
    ScenarioParams scenario;
    EnvConfig env;
    int num_envs = 8;
    int pool = 8;
    uint64_t scenario_seed_base = 1000;
    uint64_t env_seed_base = 1;
    // Traffic curriculum: episodes start traffic-free and ramp to the full
    // density once this many collected steps have passed (0 disables; the
    // ramp is a step function at the threshold). Applied identically to
    // every variant, so studies stay comparable.
    int64_t traffic_curriculum_steps = 0;
  };

  explicit DrivingVecEnv(const Config& cfg,
                         std::shared_ptr<const route::RoutePredictor> predictor = nullptr);

  int num_envs() const override { return cfg_.num_envs; }
  int bev_channels() const override { return bev::kChannelCount; }
  int grid_side() const override { return bev::kGridSize / cfg_.pool; }
  int meas_dim() const override { return meas_dim_; }
  void reset_all(float* bev_out, float* meas_out) override;
  StepInfo step(int env_index, const float (&action)[rl::kActionDim], float* bev_out,
                float* meas_out) override;

 private:
  void start_episode(int e, float* bev_out, float* meas_out);
  void write_obs(int e, float* bev_out, float* meas_out);

  Config cfg_;
  std::vector<std::unique_ptr<Environment>> envs_;
  std::vector<int64_t> episode_index_;
  int64_t total_steps_ = 0;
  int meas_dim_ = bev::MeasurementVector::kSize;
};

// Runs one evaluation episode under the policy (deterministic actions by
// default); returns the episode metrics.
struct EpisodeRunResult {
  metrics::EpisodeMetrics metrics;
  double episode_return = 0.0;
  int steps = 0;
  std::string termination;
};

EpisodeRunResult run_policy_episode(Environment* env, rl::PolicyValueNet* net, int pool,
                                    const Scenario& scenario, uint64_t seed,
                                    bool deterministic = true, Rng* action_rng = nullptr);

}  // namespace bevdrive::env
