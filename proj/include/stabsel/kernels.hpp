#pragma once

// Dense vector kernels used by the coordinate-descent inner loops and the
// column standardization. Every kernel has a scalar reference implementation;
// wider variants (AVX2+FMA on x86-64, NEON on aarch64) are selected once at
// runtime from the CPU's capabilities. Results of the wide variants agree with
// the reference up to floating-point reassociation, not bit for bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace stabsel::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
  Backend backend;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  // sum_i (a_i - shift)^2
  double (*sum_sq_dev)(const double* a, double shift, std::size_t n);
  // a_i = (a_i - shift) * scale
  void (*shift_scale)(double* a, double shift, double scale, std::size_t n);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* a, std::size_t n);
double sum_sq_dev(const double* a, double shift, std::size_t n);
void shift_scale(double* a, double shift, double scale, std::size_t n);
}  // namespace scalar

/// Table for the backend currently in force. The first call picks the widest
/// backend the CPU supports unless STABSEL_SIMD=scalar is set.
const KernelTable& active();

/// Table for a specific backend, or nullptr when it is not compiled in or the
/// CPU lacks the instructions.
const KernelTable* table_for(Backend backend);

/// Switches the process-wide backend. Returns false if unavailable.
bool select(Backend backend);

std::string_view name(Backend backend);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }

}  // namespace stabsel::kernels
