#include "bevdrive/rl/gae.hpp"

#include <stdexcept>

namespace bevdrive::rl {

void gae(const std::vector<double>& rewards, const std::vector<double>& values,
         const std::vector<uint8_t>& done_flags, double bootstrap_value, double gamma,
         double lambda, std::vector<double>* advantages_out, std::vector<double>* returns_out) {
  const size_t t_len = rewards.size();
  if (values.size() != t_len || done_flags.size() != t_len) {
    throw std::invalid_argument("gae: length mismatch");
  }
  advantages_out->assign(t_len, 0.0);
  returns_out->assign(t_len, 0.0);
  double next_adv = 0.0;
  for (size_t i = t_len; i-- > 0;) {
    const double not_done = done_flags[i] ? 0.0 : 1.0;
    const double next_value = (i + 1 < t_len) ? values[i + 1] : bootstrap_value;
    const double delta = rewards[i] + gamma * next_value * not_done - values[i];
    next_adv = delta + gamma * lambda * not_done * next_adv;
    (*advantages_out)[i] = next_adv;
    (*returns_out)[i] = next_adv + values[i];
  }
}

}  // namespace bevdrive::rl
