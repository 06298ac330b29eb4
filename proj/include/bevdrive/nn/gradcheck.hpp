#pragma once

#include <string>

#include "bevdrive/nn/tensor.hpp"

namespace bevdrive::nn {

struct GradCheckReport {
  int configs = 0;
  int checked_values = 0;
  double max_rel_err = 0.0;
  std::string worst;  // "<kind> <param/input> #<index>"
  bool pass = true;
};

// Central finite differences (h = 1e-5) against reverse-mode gradients for
// every layer kind, in double precision. Covers parameter and input
// gradients; cross-attention also exercises the attention-map output path.
GradCheckReport run_gradient_checks(int total_configs, uint64_t seed, double tolerance = 1e-4);

}  // namespace bevdrive::nn
