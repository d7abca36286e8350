#include "stabsel/kernels.hpp"

namespace stabsel::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double sum_sq_dev(const double* a, double shift, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - shift;
    acc += d * d;
  }
  return acc;
}

void shift_scale(double* a, double shift, double scale, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) a[i] = (a[i] - shift) * scale;
}

}  // namespace stabsel::kernels::scalar
