#include <cmath>
#include <cstdint>

#include "bevdrive/kern/kernels.hpp"

namespace bevdrive::kern {

namespace {

inline const float* row_ptr(const float* base, int ld, int r) { return base + static_cast<size_t>(r) * ld; }

void gemm_scalar(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
                 const float* a, int lda, const float* b, int ldb, float beta,
                 float* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<size_t>(i) * ldc;
    if (beta == 0.0f) {
      for (int j = 0; j < n; ++j) crow[j] = 0.0f;
    } else if (beta != 1.0f) {
      for (int j = 0; j < n; ++j) crow[j] *= beta;
    }
  }
  // i-p-j loop order keeps the inner loop streaming over rows of B and C.
  for (int i = 0; i < m; ++i) {
    float* crow = c + static_cast<size_t>(i) * ldc;
    for (int p = 0; p < k; ++p) {
      const float av = trans_a ? row_ptr(a, lda, p)[i] : row_ptr(a, lda, i)[p];
      const float s = alpha * av;
      if (s == 0.0f) continue;
      if (!trans_b) {
        const float* brow = row_ptr(b, ldb, p);
        for (int j = 0; j < n; ++j) crow[j] += s * brow[j];
      } else {
        for (int j = 0; j < n; ++j) crow[j] += s * row_ptr(b, ldb, j)[p];
      }
    }
  }
}

float dot_scalar(const float* a, const float* b, size_t n) {
  float acc = 0.0f;
  for (size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(size_t n, float alpha, const float* x, float* y) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void adam_scalar(size_t n, float* param, const float* grad, float* m, float* v,
                 float lr, float beta1, float beta2, float eps, float inv_bias1,
                 float inv_bias2) {
  for (size_t i = 0; i < n; ++i) {
    const float g = grad[i];
    m[i] = beta1 * m[i] + (1.0f - beta1) * g;
    v[i] = beta2 * v[i] + (1.0f - beta2) * g * g;
    const float mhat = m[i] * inv_bias1;
    const float vhat = v[i] * inv_bias2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void mask_counts_scalar(const uint8_t* a, const uint8_t* b, size_t n,
                        uint64_t* intersection, uint64_t* union_) {
  uint64_t inter = 0, uni = 0;
  for (size_t i = 0; i < n; ++i) {
    inter += static_cast<uint64_t>(a[i] & b[i]);
    uni += static_cast<uint64_t>(a[i] | b[i]);
  }
  *intersection = inter;
  *union_ = uni;
}

void pool_sum_u8_scalar(const uint8_t* in, int rows, int cols, int pool, float scale,
                        float* out) {
  const int orows = rows / pool;
  const int ocols = cols / pool;
  for (int r = 0; r < orows; ++r) {
    for (int c = 0; c < ocols; ++c) {
      uint32_t acc = 0;
      for (int dr = 0; dr < pool; ++dr) {
        const uint8_t* src = in + static_cast<size_t>(r * pool + dr) * cols + c * pool;
        for (int dc = 0; dc < pool; ++dc) acc += src[dc];
      }
      out[static_cast<size_t>(r) * ocols + c] = static_cast<float>(acc) * scale;
    }
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops table = {
      gemm_scalar, dot_scalar, axpy_scalar, adam_scalar, mask_counts_scalar,
      pool_sum_u8_scalar, "scalar",
  };
  return table;
}

}  // namespace bevdrive::kern
