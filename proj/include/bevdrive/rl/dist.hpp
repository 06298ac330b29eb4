#pragma once

#include <array>

#include "bevdrive/rng.hpp"

namespace bevdrive::rl {

constexpr int kActionDim = 2;  // (steer, accel)

// Squashed Gaussian: a = tanh(z), z ~ N(mu, sigma). Actions stay in [-1,1];
// the pre-squash z is kept so later likelihood evaluations avoid atanh.
struct ActionSample {
  std::array<float, kActionDim> action{};
  std::array<float, kActionDim> z{};
  float log_prob = 0.0f;
};

ActionSample sample_action(const float* mu, const float* log_std, Rng& rng, bool deterministic);

// log pi(a) with the tanh change-of-variables correction, evaluated at the
// stored pre-squash z.
float squashed_log_prob(const float* mu, const float* log_std, const float* z);

// Gradients of log pi wrt mu and log_std at fixed z (likelihood-ratio form).
void squashed_log_prob_grad(const float* mu, const float* log_std, const float* z,
                            float* dmu_out, float* dlog_std_out);

}  // namespace bevdrive::rl
