#include "bevdrive/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "bevdrive/kern/kernels.hpp"

namespace bevdrive::nn {

void Adam::step(const std::vector<ParamRef<float>>& params) {
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].value->size(), 0.0f);
      v_[i].assign(params[i].value->size(), 0.0f);
    }
  }
  if (m_.size() != params.size()) throw std::runtime_error("adam: parameter set changed");
  ++t_;
  const float ib1 = 1.0f / (1.0f - std::pow(cfg_.beta1, static_cast<float>(t_)));
  const float ib2 = 1.0f / (1.0f - std::pow(cfg_.beta2, static_cast<float>(t_)));
  for (size_t i = 0; i < params.size(); ++i) {
    const size_t n = params[i].value->size();
    if (m_[i].size() != n) throw std::runtime_error("adam: tensor shape changed");
    kern::ops().adam_step(n, params[i].value->ptr(), params[i].grad->ptr(), m_[i].data(),
                          v_[i].data(), cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps, ib1, ib2);
  }
}

}  // namespace bevdrive::nn
