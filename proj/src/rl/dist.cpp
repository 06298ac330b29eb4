#include "bevdrive/rl/dist.hpp"

#include <cmath>

namespace bevdrive::rl {

namespace {
constexpr float kLog2Pi = 1.8378770664093453f;

// log(1 - tanh(z)^2) = 2 * (log 2 - z - softplus(-2z)), stable for large |z|.
inline float log_one_minus_tanh2(float z) {
  const float s = -2.0f * z;
  const float softplus = s > 20.0f ? s : std::log1p(std::exp(s));
  return 2.0f * (0.6931471805599453f - z - softplus);
}
}  // namespace

ActionSample sample_action(const float* mu, const float* log_std, Rng& rng,
                           bool deterministic) {
  ActionSample out;
  for (int i = 0; i < kActionDim; ++i) {
    const float sigma = std::exp(log_std[i]);
    const float z = deterministic ? mu[i] : mu[i] + sigma * static_cast<float>(rng.normal());
    out.z[static_cast<size_t>(i)] = z;
    out.action[static_cast<size_t>(i)] = std::tanh(z);
  }
  out.log_prob = squashed_log_prob(mu, log_std, out.z.data());
  return out;
}

float squashed_log_prob(const float* mu, const float* log_std, const float* z) {
  float acc = 0.0f;
  for (int i = 0; i < kActionDim; ++i) {
    const float sigma = std::exp(log_std[i]);
    const float u = (z[i] - mu[i]) / sigma;
    acc += -0.5f * u * u - log_std[i] - 0.5f * kLog2Pi;
    acc -= log_one_minus_tanh2(z[i]);
  }
  return acc;
}

void squashed_log_prob_grad(const float* mu, const float* log_std, const float* z,
                            float* dmu_out, float* dlog_std_out) {
  for (int i = 0; i < kActionDim; ++i) {
    const float sigma = std::exp(log_std[i]);
    const float u = (z[i] - mu[i]) / sigma;
    dmu_out[i] = u / sigma;           // d logp / d mu
    dlog_std_out[i] = u * u - 1.0f;   // d logp / d log_std
  }
}

}  // namespace bevdrive::rl
