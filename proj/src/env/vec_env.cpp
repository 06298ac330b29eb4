#include "bevdrive/env/vec_env.hpp"

#include <cstring>

namespace bevdrive::env {

DrivingVecEnv::DrivingVecEnv(const Config& cfg,
                             std::shared_ptr<const route::RoutePredictor> predictor)
    : cfg_(cfg) {
  envs_.reserve(static_cast<size_t>(cfg.num_envs));
  episode_index_.assign(static_cast<size_t>(cfg.num_envs), 0);
  for (int e = 0; e < cfg.num_envs; ++e) {
    envs_.push_back(std::make_unique<Environment>(cfg.env));
    if (predictor) envs_.back()->set_route_predictor(predictor);
  }
  meas_dim_ = bev::ObservationComposer(cfg.scenario.variant).measurement_size();
}

void DrivingVecEnv::reset_all(float* bev_out, float* meas_out) {
  for (int e = 0; e < cfg_.num_envs; ++e) {
    episode_index_[static_cast<size_t>(e)] = 0;
    start_episode(e, bev_out + static_cast<size_t>(e) * bev_dim(),
                  meas_out + static_cast<size_t>(e) * meas_dim_);
  }
}

void DrivingVecEnv::start_episode(int e, float* bev_out, float* meas_out) {
  const int64_t k = episode_index_[static_cast<size_t>(e)];
  const uint64_t scenario_seed =
      cfg_.scenario_seed_base + static_cast<uint64_t>(e) * 1000003ull + static_cast<uint64_t>(k);
  const uint64_t env_seed =
      cfg_.env_seed_base + static_cast<uint64_t>(e) * 7919ull + static_cast<uint64_t>(k) * 13ull;
  Scenario scenario = make_random_scenario(scenario_seed, cfg_.scenario);
  if (cfg_.traffic_curriculum_steps > 0 && total_steps_ < cfg_.traffic_curriculum_steps) {
    scenario.traffic_count = 0;
    scenario.pedestrian_count = 0;
  }
  envs_[static_cast<size_t>(e)]->reset(scenario, env_seed);
  write_obs(e, bev_out, meas_out);
}

void DrivingVecEnv::write_obs(int e, float* bev_out, float* meas_out) {
  const bev::Observation& obs = envs_[static_cast<size_t>(e)]->observation();
  bev::pool_observation(obs, cfg_.pool, bev_out);
  for (int i = 0; i < meas_dim_; ++i) {
    meas_out[i] = i < static_cast<int>(obs.measurements.size())
                      ? obs.measurements[static_cast<size_t>(i)]
                      : 0.0f;
  }
}

rl::VecEnv::StepInfo DrivingVecEnv::step(int e, const float (&action)[rl::kActionDim],
                                         float* bev_out, float* meas_out) {
  Environment& env = *envs_[static_cast<size_t>(e)];
  const StepResult res = env.step(action[0], action[1]);
  ++total_steps_;
  StepInfo info;
  info.reward = static_cast<float>(res.reward);
  info.done = res.done;
  if (res.done) {
    info.episode_return = env.episode_return();
    info.episode_len = env.episode_steps();
    ++episode_index_[static_cast<size_t>(e)];
    start_episode(e, bev_out, meas_out);
  } else {
    write_obs(e, bev_out, meas_out);
  }
  return info;
}

EpisodeRunResult run_policy_episode(Environment* env, rl::PolicyValueNet* net, int pool,
                                    const Scenario& scenario, uint64_t seed, bool deterministic,
                                    Rng* action_rng) {
  env->reset(scenario, seed);
  const int side = bev::kGridSize / pool;
  const int meas_dim = env->measurement_dim();
  Rng fallback_rng(seed ^ 0xabcdefull);
  Rng* rng = action_rng ? action_rng : &fallback_rng;

  EpisodeRunResult out;
  while (!env->done()) {
    nn::Tensor bev({1, bev::kChannelCount, side, side});
    nn::Tensor meas({1, meas_dim});
    bev::pool_observation(env->observation(), pool, bev.ptr());
    for (int i = 0; i < meas_dim; ++i) {
      meas.data[static_cast<size_t>(i)] =
          i < static_cast<int>(env->observation().measurements.size())
              ? env->observation().measurements[static_cast<size_t>(i)]
              : 0.0f;
    }
    const auto fwd = net->forward(bev, meas);
    const auto sample = rl::sample_action(fwd.mu.ptr(), net->log_std().ptr(), *rng, deterministic);
    const StepResult res = env->step(sample.action[0], sample.action[1]);
    out.episode_return += res.reward;
    if (res.done) out.termination = res.termination;
  }
  out.metrics = env->episode_metrics();
  out.steps = env->episode_steps();
  return out;
}

}  // namespace bevdrive::env
