#pragma once

#include "bevdrive/nn/tensor.hpp"

namespace bevdrive::nn {

// Positively weighted binary cross-entropy, mean over elements:
//   -mean( w * t * log(p) + (1 - t) * log(1 - p) )
// Predictions are clamped to [eps, 1 - eps] with eps = 1e-7 before the logs.
template <typename T>
struct BceResult {
  T loss;
  TensorT<T> grad;  // d(loss)/d(pred)
};

template <typename T>
BceResult<T> bce_loss(const TensorT<T>& pred, const TensorT<T>& target, T pos_weight = T(1));

// Mean squared error with gradient, mean over elements.
template <typename T>
BceResult<T> mse_loss(const TensorT<T>& pred, const TensorT<T>& target);

}  // namespace bevdrive::nn
