#include "bevdrive/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "bevdrive/rl/gae.hpp"

namespace bevdrive::rl {

float RewardNormalizer::normalize(int env_index, float reward, bool done) {
  double& ret = running_returns_[static_cast<size_t>(env_index)];
  ret = gamma_ * ret + reward;
  ++count_;
  const double delta = ret - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (ret - mean_);
  if (done) ret = 0.0;
  return static_cast<float>(reward / scale());
}

double RewardNormalizer::scale() const {
  if (count_ < 2) return 1.0;
  const double var = m2_ / static_cast<double>(count_ - 1);
  return std::sqrt(var) + 1e-8;
}

void RolloutBatch::resize(int t, int n, int bev_d, int meas_d) {
  t_len = t;
  num_envs = n;
  bev_dim = bev_d;
  meas_dim = meas_d;
  const size_t total = static_cast<size_t>(t) * n;
  bev.assign(total * bev_d, 0.0f);
  meas.assign(total * meas_d, 0.0f);
  actions.assign(total * kActionDim, 0.0f);
  z.assign(total * kActionDim, 0.0f);
  log_probs.assign(total, 0.0f);
  rewards.assign(total, 0.0f);
  values.assign(total, 0.0f);
  dones.assign(total, 0);
  bootstrap_values.assign(static_cast<size_t>(n), 0.0f);
}

void compute_advantages(const RolloutBatch& batch, const PpoConfig& cfg,
                        std::vector<float>* advantages, std::vector<float>* returns) {
  const int t_len = batch.t_len, n = batch.num_envs;
  advantages->assign(static_cast<size_t>(t_len) * n, 0.0f);
  returns->assign(static_cast<size_t>(t_len) * n, 0.0f);
  std::vector<double> r(static_cast<size_t>(t_len)), v(static_cast<size_t>(t_len));
  std::vector<uint8_t> d(static_cast<size_t>(t_len));
  std::vector<double> adv, ret;
  for (int e = 0; e < n; ++e) {
    for (int t = 0; t < t_len; ++t) {
      const size_t idx = static_cast<size_t>(t) * n + e;
      r[static_cast<size_t>(t)] = batch.rewards[idx];
      v[static_cast<size_t>(t)] = batch.values[idx];
      d[static_cast<size_t>(t)] = batch.dones[idx];
    }
    gae(r, v, d, batch.bootstrap_values[static_cast<size_t>(e)], cfg.gamma, cfg.lambda, &adv,
        &ret);
    for (int t = 0; t < t_len; ++t) {
      const size_t idx = static_cast<size_t>(t) * n + e;
      (*advantages)[idx] = static_cast<float>(adv[static_cast<size_t>(t)]);
      (*returns)[idx] = static_cast<float>(ret[static_cast<size_t>(t)]);
    }
  }
}

LossReport ppo_update(const RolloutBatch& batch, PolicyValueNet* net, nn::Adam* optimizer,
                      const PpoConfig& cfg, Rng* rng) {
  LossReport report;
  const int total = batch.size();
  if (total == 0) return report;

  std::vector<float> advantages, returns;
  compute_advantages(batch, cfg, &advantages, &returns);

  // Batch-level advantage normalization (mean 0, std 1, eps-guarded).
  double mean = 0.0;
  for (float a : advantages) mean += a;
  mean /= total;
  double var = 0.0;
  for (float a : advantages) var += (a - mean) * (a - mean);
  var /= total;
  const double inv_std = 1.0 / (std::sqrt(var) + 1e-8);
  for (float& a : advantages) a = static_cast<float>((a - mean) * inv_std);

  const auto snapshot = net->snapshot_params();
  const int side = net->config().grid_side;
  const int channels = net->config().bev_channels;

  std::vector<int> order(static_cast<size_t>(total));
  for (int i = 0; i < total; ++i) order[static_cast<size_t>(i)] = i;

  double sum_policy = 0.0, sum_value = 0.0, sum_entropy = 0.0, sum_kl = 0.0, sum_clip = 0.0;
  int64_t n_samples = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng->uniform_int(i)]);
    }
    for (int start = 0; start < total; start += cfg.minibatch) {
      const int b = std::min(cfg.minibatch, total - start);
      nn::Tensor bev({b, channels, side, side});
      nn::Tensor meas({b, batch.meas_dim});
      for (int s = 0; s < b; ++s) {
        const int idx = order[static_cast<size_t>(start + s)];
        std::memcpy(bev.ptr() + static_cast<size_t>(s) * batch.bev_dim,
                    batch.bev.data() + static_cast<size_t>(idx) * batch.bev_dim,
                    sizeof(float) * batch.bev_dim);
        std::memcpy(meas.ptr() + static_cast<size_t>(s) * batch.meas_dim,
                    batch.meas.data() + static_cast<size_t>(idx) * batch.meas_dim,
                    sizeof(float) * batch.meas_dim);
      }

      net->zero_grad();
      auto out = net->forward(bev, meas);
      const float* log_std = net->log_std().ptr();

      nn::Tensor dmu({b, kActionDim});
      nn::Tensor dvalue({b, 1});
      double mb_policy = 0.0, mb_value = 0.0, mb_entropy = 0.0, mb_kl = 0.0;
      int mb_clipped = 0;
      const float inv_b = 1.0f / static_cast<float>(b);

      for (int s = 0; s < b; ++s) {
        const int idx = order[static_cast<size_t>(start + s)];
        const float* mu = out.mu.ptr() + static_cast<size_t>(s) * kActionDim;
        const float* zrow = batch.z.data() + static_cast<size_t>(idx) * kActionDim;
        const float logp_new = squashed_log_prob(mu, log_std, zrow);
        const float logp_old = batch.log_probs[static_cast<size_t>(idx)];
        const float adv = advantages[static_cast<size_t>(idx)];
        const float ratio = std::exp(logp_new - logp_old);
        const float clipped_ratio =
            std::clamp(ratio, 1.0f - cfg.clip_ratio, 1.0f + cfg.clip_ratio);
        const float surr = ratio * adv;
        const float surr_clipped = clipped_ratio * adv;
        const bool use_unclipped = surr <= surr_clipped;
        mb_policy += -std::min(surr, surr_clipped);
        mb_kl += logp_old - logp_new;
        mb_entropy += -logp_new;
        if (ratio < 1.0f - cfg.clip_ratio || ratio > 1.0f + cfg.clip_ratio) ++mb_clipped;

        // d(total_loss)/d(logp_new): surrogate (when unclipped side active)
        // plus the entropy bonus estimator.
        float dlogp = 0.0f;
        if (use_unclipped) dlogp += -adv * ratio * inv_b;
        dlogp += cfg.entropy_coef * inv_b;

        float gmu[kActionDim], glogstd[kActionDim];
        squashed_log_prob_grad(mu, log_std, zrow, gmu, glogstd);
        for (int k = 0; k < kActionDim; ++k) {
          dmu.ptr()[static_cast<size_t>(s) * kActionDim + k] = dlogp * gmu[k];
          net->log_std_grad().data[static_cast<size_t>(k)] += dlogp * glogstd[k];
        }

        const float v = out.value.data[static_cast<size_t>(s)];
        const float ret = returns[static_cast<size_t>(idx)];
        mb_value += (v - ret) * (v - ret);
        dvalue.data[static_cast<size_t>(s)] = cfg.value_coef * 2.0f * (v - ret) * inv_b;
      }

      const float loss_probe = static_cast<float>(mb_policy + cfg.value_coef * mb_value) * inv_b;
      if (!std::isfinite(loss_probe)) {
        net->restore_params(snapshot);
        report.aborted_non_finite = true;
        return report;
      }

      net->backward(dmu, dvalue);

      if (cfg.max_grad_norm > 0.0f) {
        double norm2 = 0.0;
        auto params = net->params();
        for (auto& p : params) {
          for (float g : p.grad->data) norm2 += static_cast<double>(g) * g;
        }
        const double norm = std::sqrt(norm2);
        if (norm > cfg.max_grad_norm) {
          const float scale = static_cast<float>(cfg.max_grad_norm / norm);
          for (auto& p : params) {
            for (float& g : p.grad->data) g *= scale;
          }
        }
      }
      auto params = net->params();
      optimizer->step(params);
      for (float& s : net->log_std_mut().data) {
        s = std::clamp(s, cfg.log_std_min, cfg.log_std_max);
      }

      sum_policy += mb_policy;
      sum_value += mb_value;
      sum_entropy += mb_entropy;
      sum_kl += mb_kl;
      sum_clip += mb_clipped;
      n_samples += b;
    }
  }

  // Parameter sanity after the full update.
  for (auto& p : net->params()) {
    for (float v : p.value->data) {
      if (!std::isfinite(v)) {
        net->restore_params(snapshot);
        report.aborted_non_finite = true;
        return report;
      }
    }
  }

  report.policy_loss = static_cast<float>(sum_policy / n_samples);
  report.value_loss = static_cast<float>(sum_value / n_samples);
  report.entropy = static_cast<float>(sum_entropy / n_samples);
  report.kl = static_cast<float>(sum_kl / n_samples);
  report.clip_fraction = static_cast<float>(sum_clip / n_samples);
  return report;
}

}  // namespace bevdrive::rl
