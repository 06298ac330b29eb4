#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "bevdrive/kern/kernels.hpp"
#include "bevdrive/rng.hpp"

using bevdrive::Rng;
namespace kern = bevdrive::kern;

namespace {

std::vector<float> random_vec(Rng& rng, size_t n, float lo = -1.0f, float hi = 1.0f) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return v;
}

// Double-precision reference used to bound both scalar and SIMD error.
std::vector<double> gemm_ref(bool ta, bool tb, int m, int n, int k, float alpha,
                             const std::vector<float>& a, int lda,
                             const std::vector<float>& b, int ldb, float beta,
                             const std::vector<float>& c0, int ldc) {
  std::vector<double> out(static_cast<size_t>(m) * ldc);
  for (size_t i = 0; i < out.size(); ++i) out[i] = c0[i];
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        const float av = ta ? a[static_cast<size_t>(p) * lda + i] : a[static_cast<size_t>(i) * lda + p];
        const float bv = tb ? b[static_cast<size_t>(j) * ldb + p] : b[static_cast<size_t>(p) * ldb + j];
        acc += static_cast<double>(av) * bv;
      }
      out[static_cast<size_t>(i) * ldc + j] = alpha * acc + static_cast<double>(beta) * c0[static_cast<size_t>(i) * ldc + j];
    }
  }
  return out;
}

void check_gemm_table(const kern::Ops& t, Rng& rng) {
  const int sizes[][3] = {{1, 1, 1},   {3, 5, 7},   {6, 16, 32},  {7, 17, 33},
                          {13, 40, 9}, {64, 48, 135}, {30, 2, 260}, {5, 31, 4}};
  for (const auto& s : sizes) {
    for (int ta = 0; ta <= 1; ++ta) {
      for (int tb = 0; tb <= 1; ++tb) {
        const int m = s[0], n = s[1], k = s[2];
        const int lda = ta ? m + 2 : k + 1;
        const int ldb = tb ? k + 3 : n + 2;
        const int ldc = n + 1;
        auto a = random_vec(rng, static_cast<size_t>(ta ? k : m) * lda);
        auto b = random_vec(rng, static_cast<size_t>(tb ? n : k) * ldb);
        auto c = random_vec(rng, static_cast<size_t>(m) * ldc);
        const float alpha = 1.25f, beta = 0.5f;
        const auto ref = gemm_ref(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
        t.gemm(ta, tb, m, n, k, alpha, a.data(), lda, b.data(), ldb, beta, c.data(), ldc);
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) {
            const double got = c[static_cast<size_t>(i) * ldc + j];
            const double want = ref[static_cast<size_t>(i) * ldc + j];
            CHECK(got == doctest::Approx(want).epsilon(1e-4));
          }
        }
      }
    }
  }
}

}  // namespace

TEST_CASE("gemm: scalar matches double reference") {
  Rng rng(11);
  check_gemm_table(kern::scalar_ops(), rng);
}

TEST_CASE("gemm: active table matches double reference") {
  Rng rng(12);
  check_gemm_table(kern::ops(), rng);
}

TEST_CASE("gemm: beta=0 overwrites garbage") {
  std::vector<float> a = {1, 2, 3, 4};
  std::vector<float> b = {5, 6, 7, 8};
  std::vector<float> c = {NAN, NAN, NAN, NAN};
  kern::ops().gemm(false, false, 2, 2, 2, 1.0f, a.data(), 2, b.data(), 2, 0.0f, c.data(), 2);
  CHECK(c[0] == doctest::Approx(19.0f));
  CHECK(c[1] == doctest::Approx(22.0f));
  CHECK(c[2] == doctest::Approx(43.0f));
  CHECK(c[3] == doctest::Approx(50.0f));
}

TEST_CASE("dot/axpy: simd equivalent to scalar") {
  Rng rng(21);
  for (size_t n : {0ul, 1ul, 7ul, 8ul, 31ul, 257ul, 1000ul}) {
    auto a = random_vec(rng, n);
    auto b = random_vec(rng, n);
    const float ds = kern::scalar_ops().dot(a.data(), b.data(), n);
    const float dv = kern::ops().dot(a.data(), b.data(), n);
    CHECK(dv == doctest::Approx(ds).epsilon(1e-4));

    auto y1 = random_vec(rng, n);
    auto y2 = y1;
    kern::scalar_ops().axpy(n, 0.37f, a.data(), y1.data());
    kern::ops().axpy(n, 0.37f, a.data(), y2.data());
    for (size_t i = 0; i < n; ++i) CHECK(y2[i] == doctest::Approx(y1[i]).epsilon(1e-5));
  }
}

TEST_CASE("adam kernel: simd equivalent to scalar") {
  Rng rng(31);
  const size_t n = 203;
  auto p1 = random_vec(rng, n);
  auto g = random_vec(rng, n);
  auto m1 = random_vec(rng, n, 0.0f, 0.1f);
  auto v1 = random_vec(rng, n, 0.0f, 0.1f);
  auto p2 = p1;
  auto m2 = m1;
  auto v2 = v1;
  const float lr = 1e-3f, b1 = 0.9f, b2 = 0.999f, eps = 1e-8f;
  const float ib1 = 1.0f / (1.0f - b1), ib2 = 1.0f / (1.0f - b2);
  kern::scalar_ops().adam_step(n, p1.data(), g.data(), m1.data(), v1.data(), lr, b1, b2, eps, ib1, ib2);
  kern::ops().adam_step(n, p2.data(), g.data(), m2.data(), v2.data(), lr, b1, b2, eps, ib1, ib2);
  for (size_t i = 0; i < n; ++i) {
    CHECK(p2[i] == doctest::Approx(p1[i]).epsilon(1e-5));
    CHECK(m2[i] == doctest::Approx(m1[i]).epsilon(1e-5));
    CHECK(v2[i] == doctest::Approx(v1[i]).epsilon(1e-5));
  }
}

TEST_CASE("mask_counts: simd exact vs scalar") {
  Rng rng(41);
  for (size_t n : {0ul, 1ul, 31ul, 32ul, 33ul, 36864ul}) {
    std::vector<uint8_t> a(n), b(n);
    for (size_t i = 0; i < n; ++i) {
      a[i] = rng.bernoulli(0.3) ? 1 : 0;
      b[i] = rng.bernoulli(0.6) ? 1 : 0;
    }
    uint64_t i1, u1, i2, u2;
    kern::scalar_ops().mask_counts(a.data(), b.data(), n, &i1, &u1);
    kern::ops().mask_counts(a.data(), b.data(), n, &i2, &u2);
    CHECK(i1 == i2);
    CHECK(u1 == u2);
  }
}

TEST_CASE("pool_sum_u8: simd exact vs scalar for pool 4 and 8") {
  Rng rng(51);
  for (int pool : {4, 8, 6}) {
    const int rows = 192, cols = 192;
    std::vector<uint8_t> in(static_cast<size_t>(rows) * cols);
    for (auto& x : in) x = rng.bernoulli(0.4) ? 1 : 0;
    const int orows = rows / pool, ocols = cols / pool;
    std::vector<float> o1(static_cast<size_t>(orows) * ocols), o2(o1.size());
    const float scale = 1.0f / static_cast<float>(pool * pool);
    kern::scalar_ops().pool_sum_u8(in.data(), rows, cols, pool, scale, o1.data());
    kern::ops().pool_sum_u8(in.data(), rows, cols, pool, scale, o2.data());
    for (size_t i = 0; i < o1.size(); ++i) CHECK(o1[i] == doctest::Approx(o2[i]));
  }
}

TEST_CASE("force_scalar switches the active table") {
  kern::force_scalar(true);
  CHECK(std::string(kern::ops().name) == "scalar");
  kern::force_scalar(false);
  if (kern::cpu_has_avx2()) {
    CHECK(std::string(kern::ops().name) == "avx2");
  }
}

TEST_CASE("rng: deterministic and sane moments") {
  Rng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(7);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.02));
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));
}
