#include <cmath>

#include "simd/backends.h"

namespace gem::simd::detail {

double dot_scalar(const double* a, const double* b, size_t n) {
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* a, size_t rows, size_t cols, const double* x, double* y) {
  for (size_t r = 0; r < rows; ++r) y[r] = dot_scalar(a + r * cols, x, cols);
}

void psi_expand_scalar(const double* proj, size_t m, double* out) {
  for (size_t t = 0; t < m; ++t) {
    const double p = proj[t];
    const double pos = p > 0.0 ? p : 0.0;
    const double neg = -p > 0.0 ? -p : 0.0;
    const double sp = std::sqrt(pos);
    const double sn = std::sqrt(neg);
    double* o = out + 6 * t;
    o[0] = sp;
    o[1] = pos;
    o[2] = pos * sp;
    o[3] = sn;
    o[4] = neg;
    o[5] = neg * sn;
  }
}

void affine_scalar(const double* x, const double* shift, const double* scale, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = (x[i] - shift[i]) * scale[i];
}

}  // namespace gem::simd::detail
