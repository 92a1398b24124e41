#pragma once

// Dense double-precision kernels used by the filters, the RMS windows and the
// recurrent network. Every kernel has a scalar reference implementation; an
// AVX2/FMA variant is selected at runtime when the CPU supports it.
//
// Set EMGFINGER_SIMD=scalar in the environment to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace emgfinger::simd {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend backend);

struct KernelTable {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y += A x, A row-major rows x cols
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y += A^T x, A row-major rows x cols, x has rows entries
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // A += alpha * u v^T, u has rows entries and v has cols entries
  void (*ger)(double alpha, const double* u, std::size_t rows, const double* v, std::size_t cols,
              double* a);
  // sum_i x[i]^2
  double (*sum_squares)(const double* x, std::size_t n);
};

const KernelTable& scalar_kernels();
#if defined(EMGFINGER_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

bool backend_available(Backend backend);

// Throws std::invalid_argument if the backend is not available on this CPU.
void select_backend(Backend backend);
Backend active_backend();
const KernelTable& kernels_for(Backend backend);
const KernelTable& kernels();

// Span front-ends over the active table.

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

inline double sum_squares(std::span<const double> x) {
  return kernels().sum_squares(x.data(), x.size());
}

}  // namespace emgfinger::simd
