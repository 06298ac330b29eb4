// AVX2 + FMA variants of the hot kernels. This translation unit is compiled
// with -mavx2 -mfma and must only be entered after the dispatcher has checked
// CPU support.

#include "bevdrive/kern/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

namespace bevdrive::kern {

namespace {

constexpr int kMR = 6;
constexpr int kNR = 16;
constexpr int kKC = 256;
constexpr int kMC = 96;

inline float a_at(const float* a, int lda, bool trans, int i, int p) {
  return trans ? a[static_cast<size_t>(p) * lda + i] : a[static_cast<size_t>(i) * lda + p];
}
inline float b_at(const float* b, int ldb, bool trans, int p, int j) {
  return trans ? b[static_cast<size_t>(j) * ldb + p] : b[static_cast<size_t>(p) * ldb + j];
}

// Packs a kc x nc slice of op(B) into kNR-wide column panels, zero-padded.
void pack_b(const float* b, int ldb, bool trans, int p0, int j0, int kc, int nc,
            float* dst) {
  for (int j = 0; j < nc; j += kNR) {
    const int jw = std::min(kNR, nc - j);
    if (!trans && jw == kNR) {
      for (int p = 0; p < kc; ++p) {
        std::memcpy(dst, b + static_cast<size_t>(p0 + p) * ldb + j0 + j, kNR * sizeof(float));
        dst += kNR;
      }
    } else {
      for (int p = 0; p < kc; ++p) {
        for (int t = 0; t < jw; ++t) dst[t] = b_at(b, ldb, trans, p0 + p, j0 + j + t);
        for (int t = jw; t < kNR; ++t) dst[t] = 0.0f;
        dst += kNR;
      }
    }
  }
}

// Packs an mc x kc slice of op(A) into kMR-tall row panels, zero-padded.
void pack_a(const float* a, int lda, bool trans, int i0, int p0, int mc, int kc,
            float* dst) {
  for (int i = 0; i < mc; i += kMR) {
    const int ih = std::min(kMR, mc - i);
    for (int p = 0; p < kc; ++p) {
      for (int t = 0; t < ih; ++t) dst[t] = a_at(a, lda, trans, i0 + i + t, p0 + p);
      for (int t = ih; t < kMR; ++t) dst[t] = 0.0f;
      dst += kMR;
    }
  }
}

// 6x16 FMA microkernel: tile = Apanel * Bpanel over kc.
inline void micro_6x16(int kc, const float* ap, const float* bp, float* tile) {
  __m256 acc[kMR][2];
  for (int r = 0; r < kMR; ++r) {
    acc[r][0] = _mm256_setzero_ps();
    acc[r][1] = _mm256_setzero_ps();
  }
  for (int p = 0; p < kc; ++p) {
    const __m256 b0 = _mm256_loadu_ps(bp);
    const __m256 b1 = _mm256_loadu_ps(bp + 8);
    bp += kNR;
    for (int r = 0; r < kMR; ++r) {
      const __m256 av = _mm256_set1_ps(ap[r]);
      acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
      acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
    }
    ap += kMR;
  }
  for (int r = 0; r < kMR; ++r) {
    _mm256_storeu_ps(tile + r * kNR, acc[r][0]);
    _mm256_storeu_ps(tile + r * kNR + 8, acc[r][1]);
  }
}

void gemm_avx2(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
               const float* a, int lda, const float* b, int ldb, float beta,
               float* c, int ldc) {
  if (m <= 0 || n <= 0) return;
  if (k <= 0 || alpha == 0.0f) {
    for (int i = 0; i < m; ++i) {
      float* crow = c + static_cast<size_t>(i) * ldc;
      if (beta == 0.0f) {
        std::memset(crow, 0, static_cast<size_t>(n) * sizeof(float));
      } else if (beta != 1.0f) {
        for (int j = 0; j < n; ++j) crow[j] *= beta;
      }
    }
    return;
  }

  thread_local std::vector<float> a_pack, b_pack;
  const int n_padded = (n + kNR - 1) / kNR * kNR;
  b_pack.resize(static_cast<size_t>(kKC) * n_padded);
  a_pack.resize(static_cast<size_t>(kMC) * kKC);
  alignas(32) float tile[kMR * kNR];

  for (int pc = 0; pc < k; pc += kKC) {
    const int kc = std::min(kKC, k - pc);
    const float beta_eff = (pc == 0) ? beta : 1.0f;
    pack_b(b, ldb, trans_b, pc, 0, kc, n, b_pack.data());
    for (int ic = 0; ic < m; ic += kMC) {
      const int mc = std::min(kMC, m - ic);
      pack_a(a, lda, trans_a, ic, pc, mc, kc, a_pack.data());
      for (int jr = 0; jr < n; jr += kNR) {
        const int jw = std::min(kNR, n - jr);
        const float* bp = b_pack.data() + static_cast<size_t>(jr / kNR) * kc * kNR;
        for (int ir = 0; ir < mc; ir += kMR) {
          const int ih = std::min(kMR, mc - ir);
          const float* ap = a_pack.data() + static_cast<size_t>(ir / kMR) * kc * kMR;
          micro_6x16(kc, ap, bp, tile);
          for (int r = 0; r < ih; ++r) {
            float* crow = c + static_cast<size_t>(ic + ir + r) * ldc + jr;
            const float* trow = tile + r * kNR;
            if (beta_eff == 0.0f) {
              for (int t = 0; t < jw; ++t) crow[t] = alpha * trow[t];
            } else if (beta_eff == 1.0f) {
              for (int t = 0; t < jw; ++t) crow[t] += alpha * trow[t];
            } else {
              for (int t = 0; t < jw; ++t) crow[t] = beta_eff * crow[t] + alpha * trow[t];
            }
          }
        }
      }
    }
  }
}

float dot_avx2(const float* a, const float* b, size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
  }
  acc0 = _mm256_add_ps(acc0, acc1);
  alignas(32) float lanes[8];
  _mm256_store_ps(lanes, acc0);
  float sum = lanes[0] + lanes[1] + lanes[2] + lanes[3] + lanes[4] + lanes[5] + lanes[6] + lanes[7];
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx2(size_t n, float alpha, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(alpha);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void adam_avx2(size_t n, float* param, const float* grad, float* m, float* v,
               float lr, float beta1, float beta2, float eps, float inv_bias1,
               float inv_bias2) {
  const __m256 vb1 = _mm256_set1_ps(beta1);
  const __m256 vb1c = _mm256_set1_ps(1.0f - beta1);
  const __m256 vb2 = _mm256_set1_ps(beta2);
  const __m256 vb2c = _mm256_set1_ps(1.0f - beta2);
  const __m256 vlr = _mm256_set1_ps(lr);
  const __m256 veps = _mm256_set1_ps(eps);
  const __m256 vib1 = _mm256_set1_ps(inv_bias1);
  const __m256 vib2 = _mm256_set1_ps(inv_bias2);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 g = _mm256_loadu_ps(grad + i);
    __m256 mi = _mm256_loadu_ps(m + i);
    __m256 vi = _mm256_loadu_ps(v + i);
    mi = _mm256_fmadd_ps(vb1, mi, _mm256_mul_ps(vb1c, g));
    vi = _mm256_fmadd_ps(vb2, vi, _mm256_mul_ps(vb2c, _mm256_mul_ps(g, g)));
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    const __m256 mhat = _mm256_mul_ps(mi, vib1);
    const __m256 vhat = _mm256_mul_ps(vi, vib2);
    const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
    const __m256 upd = _mm256_div_ps(_mm256_mul_ps(vlr, mhat), denom);
    _mm256_storeu_ps(param + i, _mm256_sub_ps(_mm256_loadu_ps(param + i), upd));
  }
  for (; i < n; ++i) {
    const float g = grad[i];
    m[i] = beta1 * m[i] + (1.0f - beta1) * g;
    v[i] = beta2 * v[i] + (1.0f - beta2) * g * g;
    param[i] -= lr * (m[i] * inv_bias1) / (std::sqrt(v[i] * inv_bias2) + eps);
  }
}

void mask_counts_avx2(const uint8_t* a, const uint8_t* b, size_t n,
                      uint64_t* intersection, uint64_t* union_) {
  const __m256i zero = _mm256_setzero_si256();
  __m256i inter_acc = zero;
  __m256i union_acc = zero;
  size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    // Masks hold 0/1 bytes, so SAD against zero sums them directly.
    inter_acc = _mm256_add_epi64(inter_acc, _mm256_sad_epu8(_mm256_and_si256(va, vb), zero));
    union_acc = _mm256_add_epi64(union_acc, _mm256_sad_epu8(_mm256_or_si256(va, vb), zero));
  }
  alignas(32) uint64_t lanes[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), inter_acc);
  uint64_t inter = lanes[0] + lanes[1] + lanes[2] + lanes[3];
  _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), union_acc);
  uint64_t uni = lanes[0] + lanes[1] + lanes[2] + lanes[3];
  for (; i < n; ++i) {
    inter += static_cast<uint64_t>(a[i] & b[i]);
    uni += static_cast<uint64_t>(a[i] | b[i]);
  }
  *intersection = inter;
  *union_ = uni;
}

void pool_sum_u8_avx2(const uint8_t* in, int rows, int cols, int pool, float scale,
                      float* out) {
  const int orows = rows / pool;
  const int ocols = cols / pool;
  if (pool == 8 && cols % 32 == 0) {
    std::vector<uint16_t> rowsum(static_cast<size_t>(ocols));
    for (int r = 0; r < orows; ++r) {
      std::fill(rowsum.begin(), rowsum.end(), 0);
      for (int dr = 0; dr < pool; ++dr) {
        const uint8_t* src = in + static_cast<size_t>(r * pool + dr) * cols;
        // SAD against zero yields sums of consecutive 8-byte groups.
        for (int c = 0; c + 32 <= cols; c += 32) {
          const __m256i vx = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + c));
          const __m256i s = _mm256_sad_epu8(vx, _mm256_setzero_si256());
          alignas(32) uint64_t lanes[4];
          _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), s);
          rowsum[c / 8 + 0] += static_cast<uint16_t>(lanes[0]);
          rowsum[c / 8 + 1] += static_cast<uint16_t>(lanes[1]);
          rowsum[c / 8 + 2] += static_cast<uint16_t>(lanes[2]);
          rowsum[c / 8 + 3] += static_cast<uint16_t>(lanes[3]);
        }
      }
      float* orow = out + static_cast<size_t>(r) * ocols;
      for (int c = 0; c < ocols; ++c) orow[c] = static_cast<float>(rowsum[c]) * scale;
    }
    return;
  }
  if (pool == 4 && cols % 32 == 0) {
    const __m256i ones8 = _mm256_set1_epi8(1);
    const __m256i ones16 = _mm256_set1_epi16(1);
    std::vector<uint32_t> rowsum(static_cast<size_t>(ocols));
    for (int r = 0; r < orows; ++r) {
      std::fill(rowsum.begin(), rowsum.end(), 0);
      for (int dr = 0; dr < pool; ++dr) {
        const uint8_t* src = in + static_cast<size_t>(r * pool + dr) * cols;
        for (int c = 0; c + 32 <= cols; c += 32) {
          const __m256i vx = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(src + c));
          // u8 pairs -> u16, then u16 pairs -> u32: sums of 4-byte groups.
          const __m256i s16 = _mm256_maddubs_epi16(vx, ones8);
          const __m256i s32 = _mm256_madd_epi16(s16, ones16);
          alignas(32) uint32_t lanes[8];
          _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), s32);
          for (int t = 0; t < 8; ++t) rowsum[c / 4 + t] += lanes[t];
        }
      }
      float* orow = out + static_cast<size_t>(r) * ocols;
      for (int c = 0; c < ocols; ++c) orow[c] = static_cast<float>(rowsum[c]) * scale;
    }
    return;
  }
  scalar_ops().pool_sum_u8(in, rows, cols, pool, scale, out);
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops table = {
      gemm_avx2, dot_avx2, axpy_avx2, adam_avx2, mask_counts_avx2,
      pool_sum_u8_avx2, "avx2",
  };
  return table;
}

}  // namespace bevdrive::kern

#endif  // __AVX2__ && __FMA__
