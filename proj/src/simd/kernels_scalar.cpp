#include "emgfinger/simd/kernels.hpp"

namespace emgfinger::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] += dot_scalar(a + r * cols, x, cols);
}

void gemv_t_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x,
                   double* y) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(x[r], a + r * cols, y, cols);
}

void ger_scalar(double alpha, const double* u, std::size_t rows, const double* v, std::size_t cols,
                double* a) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(alpha * u[r], v, a + r * cols, cols);
}

double sum_squares_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
  return acc;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{dot_scalar,   axpy_scalar, gemv_scalar,
                                 gemv_t_scalar, ger_scalar,  sum_squares_scalar};
  return table;
}

}  // namespace emgfinger::simd
