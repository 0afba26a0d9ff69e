#pragma once
// Dense double-precision kernels with a scalar reference path and vector
// variants (AVX2+FMA on x86-64, NEON on aarch64) chosen once at runtime.
//
// Matrices are row-major, `rows x cols`, contiguous.
// Setting MFTD_SIMD=scalar in the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace mftd::simd {

struct KernelTable {
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = W x + b   (b may be null)
  void (*gemv)(const double* w, const double* x, const double* b, double* y,
               std::size_t rows, std::size_t cols);
  // y += W^T x
  void (*gemv_t_acc)(const double* w, const double* x, double* y,
                     std::size_t rows, std::size_t cols);
  // W += alpha * x y^T
  void (*rank1_update)(double* w, double alpha, const double* x,
                       const double* y, std::size_t rows, std::size_t cols);
};

const KernelTable& scalar_kernels();
// nullptr when the variant is not compiled in or the CPU lacks support.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// The table selected for this process.
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace mftd::simd
