#include "bevdrive/nn/loss.hpp"

#include <algorithm>
#include <cmath>

namespace bevdrive::nn {

template <typename T>
BceResult<T> bce_loss(const TensorT<T>& pred, const TensorT<T>& target, T pos_weight) {
  if (!pred.same_shape(target)) throw std::invalid_argument("bce: shape mismatch");
  constexpr T eps = T(1e-7);
  BceResult<T> res;
  res.grad = TensorT<T>(pred.shape);
  double acc = 0.0;
  const T inv_n = T(1) / static_cast<T>(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    const T p = std::clamp(pred.data[i], eps, T(1) - eps);
    const T t = target.data[i];
    acc -= pos_weight * t * std::log(p) + (T(1) - t) * std::log(T(1) - p);
    // Clamp saturation zeroes the gradient outside [eps, 1-eps].
    const bool clamped = pred.data[i] < eps || pred.data[i] > T(1) - eps;
    res.grad.data[i] =
        clamped ? T(0) : (-pos_weight * t / p + (T(1) - t) / (T(1) - p)) * inv_n;
  }
  res.loss = static_cast<T>(acc) * inv_n;
  return res;
}

template <typename T>
BceResult<T> mse_loss(const TensorT<T>& pred, const TensorT<T>& target) {
  if (!pred.same_shape(target)) throw std::invalid_argument("mse: shape mismatch");
  BceResult<T> res;
  res.grad = TensorT<T>(pred.shape);
  double acc = 0.0;
  const T inv_n = T(1) / static_cast<T>(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    const T d = pred.data[i] - target.data[i];
    acc += static_cast<double>(d) * d;
    res.grad.data[i] = T(2) * d * inv_n;
  }
  res.loss = static_cast<T>(acc) * inv_n;
  return res;
}

template struct BceResult<float>;
template struct BceResult<double>;
template BceResult<float> bce_loss<float>(const TensorT<float>&, const TensorT<float>&, float);
template BceResult<double> bce_loss<double>(const TensorT<double>&, const TensorT<double>&, double);
template BceResult<float> mse_loss<float>(const TensorT<float>&, const TensorT<float>&);
template BceResult<double> mse_loss<double>(const TensorT<double>&, const TensorT<double>&);

}  // namespace bevdrive::nn
