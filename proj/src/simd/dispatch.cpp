#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "emgfinger/simd/kernels.hpp"

namespace emgfinger::simd {
namespace {

bool cpu_has_avx2() {
#if defined(EMGFINGER_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  if (const char* env = std::getenv("EMGFINGER_SIMD")) {
    if (std::string_view(env) == "scalar") return Backend::Scalar;
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{initial_backend()};
  return backend;
}

std::atomic<const KernelTable*>& current_table() {
  static std::atomic<const KernelTable*> table{&kernels_for(current().load())};
  return table;
}

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend backend) {
  if (backend == Backend::Scalar) return true;
  static const bool avx2 = cpu_has_avx2();
  return avx2;
}

const KernelTable& kernels_for(Backend backend) {
#if defined(EMGFINGER_HAVE_AVX2)
  if (backend == Backend::Avx2 && backend_available(Backend::Avx2)) return avx2_kernels();
#endif
  if (backend != Backend::Scalar) {
    throw std::invalid_argument("SIMD backend not available: " + std::string(backend_name(backend)));
  }
  return scalar_kernels();
}

void select_backend(Backend backend) {
  if (!backend_available(backend)) {
    throw std::invalid_argument("SIMD backend not available: " + std::string(backend_name(backend)));
  }
  current().store(backend);
  current_table().store(&kernels_for(backend));
}

Backend active_backend() { return current().load(); }

const KernelTable& kernels() { return *current_table().load(std::memory_order_relaxed); }

}  // namespace emgfinger::simd
