#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace gem::simd {

enum class Isa { scalar, avx2, neon };

/// Inner-loop kernels shared by the feature map, the moment accumulator and
/// the single-example inference path. Every backend computes the same
/// function; psi_expand and affine are bit-identical across backends, the
/// reductions (dot, gemv, axpy) agree to rounding.
struct Kernels {
  Isa isa;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// y[r] = dot(row r of the row-major rows x cols matrix a, x)
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  /// Six basis responses per projection, laid out as
  /// (+p)^(1/2), (+p)^1, (+p)^(3/2), (-p)^(1/2), (-p)^1, (-p)^(3/2)
  /// with negative arguments clipped to zero. out holds 6 * m values.
  void (*psi_expand)(const double* proj, std::size_t m, double* out);
  /// out[i] = (x[i] - shift[i]) * scale[i]
  void (*affine)(const double* x, const double* shift, const double* scale, double* out, std::size_t n);
};

std::string_view name(Isa isa);

/// True when the backend was compiled in and the running CPU supports it.
bool supported(Isa isa);

/// Backends usable on this machine, scalar first.
std::vector<Isa> available();

/// Backend table for a specific ISA. Throws if unsupported.
const Kernels& kernels_for(Isa isa);

/// The active backend: the widest supported ISA unless overridden by the
/// GEM_SIMD environment variable or select().
const Kernels& kernels();

void select(Isa isa);

}  // namespace gem::simd
