#include "bevdrive/rl/trainer.hpp"

#include <chrono>
#include <cstring>

namespace bevdrive::rl {

int64_t train(VecEnv* env, PolicyValueNet* net, nn::Adam* optimizer, const PpoConfig& cfg,
              uint64_t seed, const std::function<void(const IterationStats&)>& on_iteration) {
  const int n = env->num_envs();
  const int bev_dim = env->bev_dim();
  const int meas_dim = env->meas_dim();
  const int side = env->grid_side();
  const int channels = env->bev_channels();
  Rng rng(seed);

  std::vector<float> obs_bev(static_cast<size_t>(n) * bev_dim);
  std::vector<float> obs_meas(static_cast<size_t>(n) * meas_dim);
  env->reset_all(obs_bev.data(), obs_meas.data());

  RolloutBatch batch;
  RewardNormalizer reward_norm(n, cfg.gamma);
  int64_t steps_done = 0;
  while (steps_done < cfg.total_steps) {
    const auto t_start = std::chrono::steady_clock::now();
    batch.resize(cfg.rollout_len, n, bev_dim, meas_dim);
    double return_acc = 0.0;
    double len_acc = 0.0;
    int episodes = 0;

    for (int t = 0; t < cfg.rollout_len; ++t) {
      // Batched forward over all environments.
      nn::Tensor bev({n, channels, side, side});
      nn::Tensor meas({n, meas_dim});
      std::memcpy(bev.ptr(), obs_bev.data(), obs_bev.size() * sizeof(float));
      std::memcpy(meas.ptr(), obs_meas.data(), obs_meas.size() * sizeof(float));
      const auto out = net->forward(bev, meas);

      const size_t row = static_cast<size_t>(t) * n;
      std::memcpy(batch.bev.data() + row * bev_dim, obs_bev.data(),
                  obs_bev.size() * sizeof(float));
      std::memcpy(batch.meas.data() + row * meas_dim, obs_meas.data(),
                  obs_meas.size() * sizeof(float));

      for (int e = 0; e < n; ++e) {
        const float* mu = out.mu.ptr() + static_cast<size_t>(e) * kActionDim;
        const ActionSample sample = sample_action(mu, net->log_std().ptr(), rng, false);
        float action[kActionDim];
        for (int k = 0; k < kActionDim; ++k) {
          action[k] = sample.action[static_cast<size_t>(k)];
          batch.actions[(row + e) * kActionDim + k] = action[k];
          batch.z[(row + e) * kActionDim + k] = sample.z[static_cast<size_t>(k)];
        }
        batch.log_probs[row + e] = sample.log_prob;
        batch.values[row + e] = out.value.data[static_cast<size_t>(e)];

        const auto info = env->step(e, action, obs_bev.data() + static_cast<size_t>(e) * bev_dim,
                                    obs_meas.data() + static_cast<size_t>(e) * meas_dim);
        batch.rewards[row + e] = cfg.normalize_rewards
                                     ? reward_norm.normalize(e, info.reward, info.done)
                                     : info.reward;
        batch.dones[row + e] = info.done ? 1 : 0;
        if (info.done) {
          return_acc += info.episode_return;
          len_acc += info.episode_len;
          ++episodes;
        }
      }
    }

    // Bootstrap values for the states the rollout stopped in.
    {
      nn::Tensor bev({n, channels, side, side});
      nn::Tensor meas({n, meas_dim});
      std::memcpy(bev.ptr(), obs_bev.data(), obs_bev.size() * sizeof(float));
      std::memcpy(meas.ptr(), obs_meas.data(), obs_meas.size() * sizeof(float));
      const auto out = net->forward(bev, meas);
      for (int e = 0; e < n; ++e) {
        batch.bootstrap_values[static_cast<size_t>(e)] = out.value.data[static_cast<size_t>(e)];
      }
    }

    IterationStats stats;
    stats.loss = ppo_update(batch, net, optimizer, cfg, &rng);
    steps_done += static_cast<int64_t>(cfg.rollout_len) * n;
    stats.env_steps = steps_done;
    stats.episodes_finished = episodes;
    stats.mean_episode_return = episodes > 0 ? return_acc / episodes : 0.0;
    stats.mean_episode_len = episodes > 0 ? len_acc / episodes : 0.0;
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                          .count();
    stats.steps_per_second = dt > 0 ? static_cast<double>(cfg.rollout_len) * n / dt : 0.0;
    if (on_iteration) on_iteration(stats);
  }
  return steps_done;
}

}  // namespace bevdrive::rl
