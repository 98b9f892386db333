#include <immintrin.h>

#include "simd/backends.h"

namespace gem::simd::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot_avx2(const double* a, const double* b, size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double sum = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_avx2(const double* a, size_t rows, size_t cols, const double* x, double* y) {
  size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* r0 = a + r * cols;
    const double* r1 = r0 + cols;
    const double* r2 = r1 + cols;
    const double* r3 = r2 + cols;
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 4 <= cols; i += 4) {
      const __m256d vx = _mm256_loadu_pd(x + i);
      acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + i), vx, acc0);
      acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + i), vx, acc1);
      acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + i), vx, acc2);
      acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(r3 + i), vx, acc3);
    }
    double s0 = hsum(acc0), s1 = hsum(acc1), s2 = hsum(acc2), s3 = hsum(acc3);
    for (; i < cols; ++i) {
      s0 += r0[i] * x[i];
      s1 += r1[i] * x[i];
      s2 += r2[i] * x[i];
      s3 += r3[i] * x[i];
    }
    y[r] = s0;
    y[r + 1] = s1;
    y[r + 2] = s2;
    y[r + 3] = s3;
  }
  for (; r < rows; ++r) y[r] = dot_avx2(a + r * cols, x, cols);
}

void psi_expand_avx2(const double* proj, size_t m, double* out) {
  const __m256d zero = _mm256_setzero_pd();
  alignas(32) double sp[4], pos[4], cp[4], sn[4], neg[4], cn[4];
  size_t t = 0;
  for (; t + 4 <= m; t += 4) {
    const __m256d p = _mm256_loadu_pd(proj + t);
    const __m256d vp = _mm256_and_pd(p, _mm256_cmp_pd(p, zero, _CMP_GT_OQ));
    const __m256d q = _mm256_sub_pd(zero, p);
    const __m256d vn = _mm256_and_pd(q, _mm256_cmp_pd(q, zero, _CMP_GT_OQ));
    const __m256d rp = _mm256_sqrt_pd(vp);
    const __m256d rn = _mm256_sqrt_pd(vn);
    _mm256_store_pd(sp, rp);
    _mm256_store_pd(pos, vp);
    _mm256_store_pd(cp, _mm256_mul_pd(vp, rp));
    _mm256_store_pd(sn, rn);
    _mm256_store_pd(neg, vn);
    _mm256_store_pd(cn, _mm256_mul_pd(vn, rn));
    for (int l = 0; l < 4; ++l) {
      double* o = out + 6 * (t + l);
      o[0] = sp[l];
      o[1] = pos[l];
      o[2] = cp[l];
      o[3] = sn[l];
      o[4] = neg[l];
      o[5] = cn[l];
    }
  }
  if (t < m) psi_expand_scalar(proj + t, m - t, out + 6 * t);
}

void affine_avx2(const double* x, const double* shift, const double* scale, double* out, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(shift + i));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(d, _mm256_loadu_pd(scale + i)));
  }
  if (i < n) affine_scalar(x + i, shift + i, scale + i, out + i, n - i);
}

}  // namespace gem::simd::detail
