#pragma once

#include <cstddef>
#include <cstdint>

namespace bevdrive::kern {

// Hot arithmetic kernels behind a runtime-dispatched table. Every entry has a
// scalar reference implementation; the AVX2 variants are selected once at
// startup when the CPU supports them. Equivalence between the two is covered
// by dedicated tests, so the rest of the code base can call ops() blindly.
struct Ops {
  // Row-major C = alpha * op(A) * op(B) + beta * C.
  // op(X) = X or X^T per the transpose flags; lda/ldb/ldc are row strides.
  void (*gemm)(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
               const float* a, int lda, const float* b, int ldb, float beta,
               float* c, int ldc);

  float (*dot)(const float* a, const float* b, size_t n);

  // y += alpha * x
  void (*axpy)(size_t n, float alpha, const float* x, float* y);

  // In-place Adam update. inv_bias1 = 1/(1-beta1^t), inv_bias2 = 1/(1-beta2^t).
  void (*adam_step)(size_t n, float* param, const float* grad, float* m, float* v,
                    float lr, float beta1, float beta2, float eps, float inv_bias1,
                    float inv_bias2);

  // Popcount-style reduction over two 0/1 byte masks.
  void (*mask_counts)(const uint8_t* a, const uint8_t* b, size_t n,
                      uint64_t* intersection, uint64_t* union_);

  // Sums pool x pool blocks of a rows x cols byte grid into floats, scaled.
  // rows and cols must be divisible by pool; out is (rows/pool) x (cols/pool).
  void (*pool_sum_u8)(const uint8_t* in, int rows, int cols, int pool, float scale,
                      float* out);

  const char* name;
};

// Active table (AVX2 when available, scalar otherwise).
const Ops& ops();

// Scalar reference table, always available; the oracle for equivalence tests.
const Ops& scalar_ops();

// Forces the scalar table regardless of CPU features (also settable via the
// BEVDRIVE_FORCE_SCALAR environment variable before first use).
void force_scalar(bool on);

bool cpu_has_avx2();

}  // namespace bevdrive::kern
