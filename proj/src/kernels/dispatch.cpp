#include <atomic>
#include <cstdlib>
#include <string>

#include "stabsel/kernels.hpp"

namespace stabsel::kernels {

#if defined(STABSEL_BUILD_AVX2)
namespace avx2 {
double dot(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
double sum(const double*, std::size_t);
double sum_sq_dev(const double*, double, std::size_t);
void shift_scale(double*, double, double, std::size_t);
}  // namespace avx2
#endif

#if defined(STABSEL_BUILD_NEON)
namespace neon {
double dot(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
double sum(const double*, std::size_t);
double sum_sq_dev(const double*, double, std::size_t);
void shift_scale(double*, double, double, std::size_t);
}  // namespace neon
#endif

namespace {

constexpr KernelTable kScalar{Backend::Scalar, scalar::dot, scalar::axpy, scalar::sum,
                              scalar::sum_sq_dev, scalar::shift_scale};

#if defined(STABSEL_BUILD_AVX2)
constexpr KernelTable kAvx2{Backend::Avx2, avx2::dot, avx2::axpy, avx2::sum, avx2::sum_sq_dev,
                            avx2::shift_scale};

bool cpu_has_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

#if defined(STABSEL_BUILD_NEON)
constexpr KernelTable kNeon{Backend::Neon, neon::dot, neon::axpy, neon::sum, neon::sum_sq_dev,
                            neon::shift_scale};
#endif

const KernelTable* best_available() {
  if (const char* env = std::getenv("STABSEL_SIMD"); env && std::string(env) == "scalar") {
    return &kScalar;
  }
#if defined(STABSEL_BUILD_AVX2)
  if (cpu_has_avx2()) return &kAvx2;
#endif
#if defined(STABSEL_BUILD_NEON)
  return &kNeon;
#endif
  return &kScalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{best_available()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

const KernelTable* table_for(Backend backend) {
  switch (backend) {
    case Backend::Scalar:
      return &kScalar;
    case Backend::Avx2:
#if defined(STABSEL_BUILD_AVX2)
      if (cpu_has_avx2()) return &kAvx2;
#endif
      return nullptr;
    case Backend::Neon:
#if defined(STABSEL_BUILD_NEON)
      return &kNeon;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

bool select(Backend backend) {
  const KernelTable* t = table_for(backend);
  if (!t) return false;
  current().store(t, std::memory_order_release);
  return true;
}

std::string_view name(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

}  // namespace stabsel::kernels
