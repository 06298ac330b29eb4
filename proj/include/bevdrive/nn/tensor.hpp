#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace bevdrive::nn {

// Dense row-major tensor of up to 4 dims. double instantiations exist for
// the 64-bit gradient-check mode; training runs in float.
template <typename T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> s) : shape(std::move(s)) {
    data.assign(count(shape), T(0));
  }

  static size_t count(const std::vector<int>& s) {
    size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("tensor dims must be positive");
      n *= static_cast<size_t>(d);
    }
    return n;
  }

  size_t size() const { return data.size(); }
  int dim(size_t i) const { return i < shape.size() ? shape[i] : 1; }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  void reshape(std::vector<int> s) {
    if (count(s) != data.size()) throw std::invalid_argument("reshape size mismatch");
    shape = std::move(s);
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }
};

using Tensor = TensorT<float>;

template <typename T>
void check_finite(const TensorT<T>& t, const char* what) {
  for (const T& v : t.data) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string("non-finite value in ") + what);
    }
  }
}

// A named view of one parameter tensor and its gradient; the unit the
// optimizer and checkpoints operate on.
template <typename T>
struct ParamRef {
  std::string name;
  TensorT<T>* value = nullptr;
  TensorT<T>* grad = nullptr;
};

}  // namespace bevdrive::nn
