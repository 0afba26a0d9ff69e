#include <cstdlib>
#include <string_view>

#include "mftd/simd.hpp"

namespace mftd::simd {

namespace detail {
#if defined(MFTD_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(MFTD_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

const KernelTable* avx2_kernels() {
#if defined(MFTD_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(MFTD_HAVE_NEON)
  // Advanced SIMD is mandatory on AArch64.
  return &detail::kNeonTable;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& table = []() -> const KernelTable& {
    const char* forced = std::getenv("MFTD_SIMD");
    if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
    if (const KernelTable* t = avx2_kernels()) return *t;
    if (const KernelTable* t = neon_kernels()) return *t;
    return scalar_kernels();
  }();
  return table;
}

}  // namespace mftd::simd
