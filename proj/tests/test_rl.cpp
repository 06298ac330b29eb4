#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bevdrive/rl/gae.hpp"
#include "bevdrive/rl/ppo.hpp"

using namespace bevdrive;
using namespace bevdrive::rl;

namespace {

// Brute-force GAE: A_t = sum_l (gamma*lambda)^l delta_{t+l}, truncated at the
// first termination; the independent oracle for the recursive form.
void gae_bruteforce(const std::vector<double>& r, const std::vector<double>& v,
                    const std::vector<uint8_t>& d, double boot, double gamma, double lambda,
                    std::vector<double>* adv) {
  const size_t t_len = r.size();
  adv->assign(t_len, 0.0);
  for (size_t t = 0; t < t_len; ++t) {
    double acc = 0.0;
    double w = 1.0;
    for (size_t l = t; l < t_len; ++l) {
      const double next_v = (l + 1 < t_len) ? v[l + 1] : boot;
      const double not_done = d[l] ? 0.0 : 1.0;
      const double delta = r[l] + gamma * next_v * not_done - v[l];
      acc += w * delta;
      if (d[l]) break;
      w *= gamma * lambda;
    }
    (*adv)[t] = acc;
  }
}

}  // namespace

TEST_CASE("gae: T=1 unrolls the definition") {
  std::vector<double> adv, ret;
  gae({2.0}, {0.7}, {0}, 1.5, 0.9, 0.8, &adv, &ret);
  CHECK(adv[0] == doctest::Approx(2.0 + 0.9 * 1.5 - 0.7).epsilon(1e-12));
  CHECK(ret[0] == doctest::Approx(adv[0] + 0.7).epsilon(1e-12));

  gae({2.0}, {0.7}, {1}, 1.5, 0.9, 0.8, &adv, &ret);
  CHECK(adv[0] == doctest::Approx(2.0 - 0.7).epsilon(1e-12));
}

TEST_CASE("gae: lambda=0 collapses to one-step deltas") {
  Rng rng(5);
  const int t_len = 16;
  std::vector<double> r(t_len), v(t_len);
  std::vector<uint8_t> d(t_len, 0);
  for (int i = 0; i < t_len; ++i) {
    r[static_cast<size_t>(i)] = rng.uniform(-1, 1);
    v[static_cast<size_t>(i)] = rng.uniform(-1, 1);
    d[static_cast<size_t>(i)] = rng.bernoulli(0.1);
  }
  const double boot = rng.uniform(-1, 1);
  std::vector<double> adv, ret;
  gae(r, v, d, boot, 0.97, 0.0, &adv, &ret);
  for (int t = 0; t < t_len; ++t) {
    const double next_v = (t + 1 < t_len) ? v[static_cast<size_t>(t + 1)] : boot;
    const double nd = d[static_cast<size_t>(t)] ? 0.0 : 1.0;
    const double delta = r[static_cast<size_t>(t)] + 0.97 * next_v * nd - v[static_cast<size_t>(t)];
    CHECK(adv[static_cast<size_t>(t)] == doctest::Approx(delta).epsilon(1e-12));
  }
}

TEST_CASE("gae: lambda=1 without terminations equals discounted reward-to-go") {
  Rng rng(7);
  const int t_len = 24;
  std::vector<double> r(t_len), v(t_len);
  std::vector<uint8_t> d(t_len, 0);
  for (int i = 0; i < t_len; ++i) {
    r[static_cast<size_t>(i)] = rng.uniform(-1, 1);
    v[static_cast<size_t>(i)] = rng.uniform(-1, 1);
  }
  const double boot = rng.uniform(-1, 1);
  const double gamma = 0.95;
  std::vector<double> adv, ret;
  gae(r, v, d, boot, gamma, 1.0, &adv, &ret);
  for (int t = 0; t < t_len; ++t) {
    double expected = -v[static_cast<size_t>(t)];
    double w = 1.0;
    for (int l = t; l < t_len; ++l) {
      expected += w * r[static_cast<size_t>(l)];
      w *= gamma;
    }
    expected += w * boot;
    CHECK(std::abs(adv[static_cast<size_t>(t)] - expected) < 1e-9);
  }
}

TEST_CASE("gae equals the brute-force double sum on 1000 random instances") {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int t_len = 1 + static_cast<int>(rng.uniform_int(32));
    std::vector<double> r(static_cast<size_t>(t_len)), v(static_cast<size_t>(t_len));
    std::vector<uint8_t> d(static_cast<size_t>(t_len));
    for (int i = 0; i < t_len; ++i) {
      r[static_cast<size_t>(i)] = rng.uniform(-5, 5);
      v[static_cast<size_t>(i)] = rng.uniform(-5, 5);
      d[static_cast<size_t>(i)] = rng.bernoulli(0.15);
    }
    const double boot = rng.uniform(-5, 5);
    const double gamma = rng.uniform(0.8, 1.0);
    const double lambda = rng.uniform(0.0, 1.0);
    std::vector<double> adv, ret, brute;
    gae(r, v, d, boot, gamma, lambda, &adv, &ret);
    gae_bruteforce(r, v, d, boot, gamma, lambda, &brute);
    for (int t = 0; t < t_len; ++t) {
      REQUIRE(std::abs(adv[static_cast<size_t>(t)] - brute[static_cast<size_t>(t)]) < 1e-9);
    }
  }
}

TEST_CASE("sample_action: range, determinism, moments") {
  Rng rng(13);
  const float mu[2] = {0.0f, 0.0f};
  const float log_std[2] = {std::log(0.1f), std::log(0.1f)};
  double mean0 = 0.0, mean1 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto s = sample_action(mu, log_std, rng, false);
    CHECK(s.action[0] >= -1.0f);
    CHECK(s.action[0] <= 1.0f);
    CHECK(s.action[1] >= -1.0f);
    CHECK(s.action[1] <= 1.0f);
    mean0 += s.action[0];
    mean1 += s.action[1];
  }
  CHECK(std::abs(mean0 / n) < 0.01);
  CHECK(std::abs(mean1 / n) < 0.01);

  const auto det = sample_action(mu, log_std, rng, true);
  CHECK(det.action[0] == 0.0f);
  CHECK(det.action[1] == 0.0f);

  const float mu2[2] = {3.0f, -2.0f};
  const auto wide = sample_action(mu2, log_std, rng, false);
  CHECK(wide.action[0] > -1.0f);
  CHECK(wide.action[0] < 1.0f);
}

TEST_CASE("squashed density integrates to one and factorizes") {
  // Per-dimension density on a grid of the action interval.
  const double mu = 0.25, sigma = 0.6;
  auto logpdf_1d = [&](double a) {
    const double z = std::atanh(std::clamp(a, -1.0 + 1e-12, 1.0 - 1e-12));
    const double u = (z - mu) / sigma;
    const double log_gauss = -0.5 * u * u - std::log(sigma) - 0.5 * std::log(2.0 * M_PI);
    return log_gauss - std::log1p(-std::tanh(z) * std::tanh(z));
  };
  const int grid = 200001;
  double integral = 0.0;
  const double h = 2.0 / (grid - 1);
  for (int i = 0; i < grid; ++i) {
    const double a = -1.0 + i * h;
    if (std::abs(a) >= 1.0 - 1e-9) continue;
    const double w = (i == 0 || i == grid - 1) ? 0.5 : 1.0;
    integral += w * std::exp(logpdf_1d(a)) * h;
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-4));

  // The 2-dim log_prob is the sum of the per-dimension terms.
  const float fmu[2] = {0.25f, -0.4f};
  const float flog_std[2] = {std::log(0.6f), std::log(0.3f)};
  const float z[2] = {0.7f, -0.2f};
  const double mu_b = -0.4, sigma_b = 0.3;
  auto logpdf_b = [&](double a) {
    const double zz = std::atanh(std::clamp(a, -1.0 + 1e-12, 1.0 - 1e-12));
    const double u = (zz - mu_b) / sigma_b;
    return -0.5 * u * u - std::log(sigma_b) - 0.5 * std::log(2.0 * M_PI) -
           std::log1p(-std::tanh(zz) * std::tanh(zz));
  };
  const double expected = logpdf_1d(std::tanh(0.7)) + logpdf_b(std::tanh(-0.2));
  CHECK(squashed_log_prob(fmu, flog_std, z) == doctest::Approx(expected).epsilon(1e-4));
}

TEST_CASE("ppo_update: ratio 1 and clipped contributions") {
  PolicyNetConfig net_cfg;
  net_cfg.grid_side = 8;
  net_cfg.conv_channels = {4, 8};
  net_cfg.trunk_width = 16;
  net_cfg.meas_embed = 4;
  PolicyValueNet net(net_cfg, 3);

  PpoConfig cfg;
  cfg.epochs = 1;
  cfg.minibatch = 2;
  cfg.entropy_coef = 0.0f;
  cfg.learning_rate = 0.0f;
  cfg.max_grad_norm = 0.0f;

  RolloutBatch batch;
  batch.resize(1, 2, net_cfg.bev_channels * 8 * 8, net_cfg.meas_dim);
  Rng rng(5);
  for (auto& v : batch.bev) v = static_cast<float>(rng.uniform(0, 1));
  for (auto& v : batch.meas) v = static_cast<float>(rng.uniform(-1, 1));

  // Evaluate the current policy so stored log-probs can pin the ratio.
  nn::Tensor bev({2, net_cfg.bev_channels, 8, 8});
  nn::Tensor meas({2, net_cfg.meas_dim});
  std::copy(batch.bev.begin(), batch.bev.end(), bev.ptr());
  std::copy(batch.meas.begin(), batch.meas.end(), meas.ptr());
  const auto out = net.forward(bev, meas);
  for (int e = 0; e < 2; ++e) {
    const float* mu = out.mu.ptr() + static_cast<size_t>(e) * kActionDim;
    const auto s = sample_action(mu, net.log_std().ptr(), rng, false);
    for (int k = 0; k < kActionDim; ++k) {
      batch.z[static_cast<size_t>(e) * kActionDim + k] = s.z[static_cast<size_t>(k)];
      batch.actions[static_cast<size_t>(e) * kActionDim + k] = s.action[static_cast<size_t>(k)];
    }
    batch.log_probs[static_cast<size_t>(e)] = s.log_prob;
    batch.values[static_cast<size_t>(e)] = 0.0f;
  }
  // Advantages {+1, -1} normalize to themselves.
  batch.rewards = {1.0f, -1.0f};
  batch.bootstrap_values = {0.0f, 0.0f};

  nn::Adam opt({.lr = 0.0f});
  Rng update_rng(7);

  SUBCASE("ratio exactly 1: policy loss is -mean(advantage)") {
    const auto report = ppo_update(batch, &net, &opt, cfg, &update_rng);
    // -mean(+1, -1) = 0 after normalization keeps them at +-1.
    CHECK(report.policy_loss == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(report.kl == doctest::Approx(0.0).epsilon(1e-5));
    CHECK(report.clip_fraction == doctest::Approx(0.0));
  }

  SUBCASE("ratio 1 + 2eps with positive advantage clips at (1 + eps) * advantage") {
    // Shift the stored log-prob of the positive-advantage sample so the new
    // ratio lands at 1 + 2 * clip.
    batch.log_probs[0] -= std::log(1.0f + 2.0f * cfg.clip_ratio);
    const auto report = ppo_update(batch, &net, &opt, cfg, &update_rng);
    // Sample 0 contributes -(1 + eps) * 1, sample 1 contributes +1.
    const float expected = 0.5f * (-(1.0f + cfg.clip_ratio) * 1.0f + 1.0f);
    CHECK(report.policy_loss == doctest::Approx(expected).epsilon(1e-4));
    CHECK(report.clip_fraction == doctest::Approx(0.5));
  }
}

TEST_CASE("ppo_update: zero advantages and exact value head leave parameters unchanged") {
  PolicyNetConfig net_cfg;
  net_cfg.grid_side = 8;
  net_cfg.conv_channels = {4};
  net_cfg.trunk_width = 8;
  net_cfg.meas_embed = 4;
  PolicyValueNet net(net_cfg, 9);

  PpoConfig cfg;
  cfg.epochs = 2;
  cfg.minibatch = 4;
  cfg.entropy_coef = 0.0f;
  cfg.learning_rate = 1e-3f;
  // gamma = 0 with r_t = v_t makes every delta *exactly* zero in float,
  // which is what the parameter-freeze contract requires.
  cfg.gamma = 0.0;

  RolloutBatch batch;
  batch.resize(2, 2, net_cfg.bev_channels * 8 * 8, net_cfg.meas_dim);
  Rng rng(1);
  for (auto& v : batch.bev) v = static_cast<float>(rng.uniform(0, 1));

  // Evaluate values, then choose rewards so every delta is exactly zero and
  // returns equal the value head's output.
  std::vector<float> values(4);
  for (int t = 0; t < 2; ++t) {
    nn::Tensor bev({2, net_cfg.bev_channels, 8, 8});
    nn::Tensor meas({2, net_cfg.meas_dim});
    std::copy(batch.bev.begin() + static_cast<long>(t) * 2 * batch.bev_dim,
              batch.bev.begin() + static_cast<long>(t + 1) * 2 * batch.bev_dim, bev.ptr());
    std::copy(batch.meas.begin() + static_cast<long>(t) * 2 * batch.meas_dim,
              batch.meas.begin() + static_cast<long>(t + 1) * 2 * batch.meas_dim, meas.ptr());
    const auto out = net.forward(bev, meas);
    for (int e = 0; e < 2; ++e) {
      const size_t idx = static_cast<size_t>(t) * 2 + e;
      values[idx] = out.value.data[static_cast<size_t>(e)];
      batch.values[idx] = values[idx];
      const float* mu = out.mu.ptr() + static_cast<size_t>(e) * kActionDim;
      const auto s = sample_action(mu, net.log_std().ptr(), rng, false);
      for (int k = 0; k < kActionDim; ++k) {
        batch.z[idx * kActionDim + k] = s.z[static_cast<size_t>(k)];
      }
      batch.log_probs[idx] = s.log_prob;
    }
  }
  for (int e = 0; e < 2; ++e) {
    batch.bootstrap_values[static_cast<size_t>(e)] = values[static_cast<size_t>(2 + e)];
    batch.rewards[static_cast<size_t>(e)] = values[static_cast<size_t>(e)];
    batch.rewards[static_cast<size_t>(2 + e)] = values[static_cast<size_t>(2 + e)];
  }

  const auto before = net.snapshot_params();
  nn::Adam opt({.lr = cfg.learning_rate});
  Rng update_rng(3);
  const auto report = ppo_update(batch, &net, &opt, cfg, &update_rng);
  CHECK(report.value_loss == doctest::Approx(0.0).epsilon(1e-8));
  const auto after = net.snapshot_params();
  for (size_t i = 0; i < before.size(); ++i) {
    for (size_t j = 0; j < before[i].size(); ++j) {
      REQUIRE(before[i][j] == after[i][j]);
    }
  }
}
