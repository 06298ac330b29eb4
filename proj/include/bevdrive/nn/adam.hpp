#pragma once

#include <vector>

#include "bevdrive/nn/tensor.hpp"

namespace bevdrive::nn {

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Standard Adam with bias correction, one moment pair per parameter tensor.
// The per-element update runs through the dispatched kernel table.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Binds to the parameter set on first call; shapes must stay stable.
  void step(const std::vector<ParamRef<float>>& params);
  void set_lr(float lr) { cfg_.lr = lr; }
  float lr() const { return cfg_.lr; }
  int64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<std::vector<float>> m_, v_;
};

}  // namespace bevdrive::nn
