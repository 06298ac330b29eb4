#include <atomic>
#include <cstdlib>

#include "bevdrive/kern/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <cpuid.h>
#endif

namespace bevdrive::kern {

#if defined(BEVDRIVE_HAVE_AVX2_TU)
const Ops& avx2_ops();
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  unsigned eax, ebx, ecx, edx;
  if (!__get_cpuid(1, &eax, &ebx, &ecx, &edx)) return false;
  const bool has_fma = (ecx & bit_FMA) != 0;
  const bool has_osxsave = (ecx & bit_OSXSAVE) != 0;
  if (!has_fma || !has_osxsave) return false;
  if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return false;
  return (ebx & bit_AVX2) != 0;
#else
  return false;
#endif
}

namespace {
std::atomic<bool> g_force_scalar{false};

const Ops* pick() {
  if (const char* env = std::getenv("BEVDRIVE_FORCE_SCALAR")) {
    if (env[0] == '1' || env[0] == 't' || env[0] == 'y') return &scalar_ops();
  }
#if defined(BEVDRIVE_HAVE_AVX2_TU)
  if (cpu_has_avx2()) return &avx2_ops();
#endif
  return &scalar_ops();
}
}  // namespace

const Ops& ops() {
  static const Ops* detected = pick();
  return g_force_scalar.load(std::memory_order_relaxed) ? scalar_ops() : *detected;
}

void force_scalar(bool on) { g_force_scalar.store(on, std::memory_order_relaxed); }

}  // namespace bevdrive::kern
