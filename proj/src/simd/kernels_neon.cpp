#include <arm_neon.h>

#include "simd/backends.h"

namespace gem::simd::detail {

double dot_neon(const double* a, const double* b, size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  float64x2_t acc2 = vdupq_n_f64(0.0);
  float64x2_t acc3 = vdupq_n_f64(0.0);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    acc2 = vfmaq_f64(acc2, vld1q_f64(a + i + 4), vld1q_f64(b + i + 4));
    acc3 = vfmaq_f64(acc3, vld1q_f64(a + i + 6), vld1q_f64(b + i + 6));
  }
  for (; i + 2 <= n; i += 2) acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  double sum = vaddvq_f64(vaddq_f64(vaddq_f64(acc0, acc1), vaddq_f64(acc2, acc3)));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_neon(double alpha, const double* x, double* y, size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_neon(const double* a, size_t rows, size_t cols, const double* x, double* y) {
  for (size_t r = 0; r < rows; ++r) y[r] = dot_neon(a + r * cols, x, cols);
}

void psi_expand_neon(const double* proj, size_t m, double* out) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  size_t t = 0;
  for (; t + 2 <= m; t += 2) {
    const float64x2_t p = vld1q_f64(proj + t);
    const float64x2_t q = vsubq_f64(zero, p);
    const float64x2_t vp = vbslq_f64(vcgtq_f64(p, zero), p, zero);
    const float64x2_t vn = vbslq_f64(vcgtq_f64(q, zero), q, zero);
    const float64x2_t rp = vsqrtq_f64(vp);
    const float64x2_t rn = vsqrtq_f64(vn);
    const float64x2_t cp = vmulq_f64(vp, rp);
    const float64x2_t cn = vmulq_f64(vn, rn);
    double* o = out + 6 * t;
    o[0] = vgetq_lane_f64(rp, 0);
    o[1] = vgetq_lane_f64(vp, 0);
    o[2] = vgetq_lane_f64(cp, 0);
    o[3] = vgetq_lane_f64(rn, 0);
    o[4] = vgetq_lane_f64(vn, 0);
    o[5] = vgetq_lane_f64(cn, 0);
    o[6] = vgetq_lane_f64(rp, 1);
    o[7] = vgetq_lane_f64(vp, 1);
    o[8] = vgetq_lane_f64(cp, 1);
    o[9] = vgetq_lane_f64(rn, 1);
    o[10] = vgetq_lane_f64(vn, 1);
    o[11] = vgetq_lane_f64(cn, 1);
  }
  if (t < m) psi_expand_scalar(proj + t, m - t, out + 6 * t);
}

void affine_neon(const double* x, const double* shift, const double* scale, double* out, size_t n) {
  size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vld1q_f64(shift + i));
    vst1q_f64(out + i, vmulq_f64(d, vld1q_f64(scale + i)));
  }
  if (i < n) affine_scalar(x + i, shift + i, scale + i, out + i, n - i);
}

}  // namespace gem::simd::detail
