#pragma once

// Kept free of C++ standard library headers so the NEON translation unit
// also builds in freestanding cross-compilation checks.
#include <stddef.h>

namespace gem::simd::detail {

double dot_scalar(const double* a, const double* b, size_t n);
void axpy_scalar(double alpha, const double* x, double* y, size_t n);
void gemv_scalar(const double* a, size_t rows, size_t cols, const double* x, double* y);
void psi_expand_scalar(const double* proj, size_t m, double* out);
void affine_scalar(const double* x, const double* shift, const double* scale, double* out, size_t n);

double dot_avx2(const double* a, const double* b, size_t n);
void axpy_avx2(double alpha, const double* x, double* y, size_t n);
void gemv_avx2(const double* a, size_t rows, size_t cols, const double* x, double* y);
void psi_expand_avx2(const double* proj, size_t m, double* out);
void affine_avx2(const double* x, const double* shift, const double* scale, double* out, size_t n);

double dot_neon(const double* a, const double* b, size_t n);
void axpy_neon(double alpha, const double* x, double* y, size_t n);
void gemv_neon(const double* a, size_t rows, size_t cols, const double* x, double* y);
void psi_expand_neon(const double* proj, size_t m, double* out);
void affine_neon(const double* x, const double* shift, const double* scale, double* out, size_t n);

}  // namespace gem::simd::detail
