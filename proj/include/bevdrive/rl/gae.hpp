#pragma once

#include <cstdint>
#include <vector>

namespace bevdrive::rl {

// Generalized advantage estimation over one trajectory:
//   delta_t = r_t + gamma * v_{t+1} * (1 - done_t) - v_t
//   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// v_{T} is the bootstrap value; returns_out = A + v.
void gae(const std::vector<double>& rewards, const std::vector<double>& values,
         const std::vector<uint8_t>& done_flags, double bootstrap_value, double gamma,
         double lambda, std::vector<double>* advantages_out, std::vector<double>* returns_out);

}  // namespace bevdrive::rl
