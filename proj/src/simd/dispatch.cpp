#include <atomic>
#include <cstdlib>
#include <string>

#include "gem/error.hpp"
#include "gem/log.hpp"
#include "gem/simd/kernels.hpp"
#include "simd/backends.h"

namespace gem::simd {
namespace {

using namespace detail;

constexpr Kernels kScalar{Isa::scalar, dot_scalar, axpy_scalar, gemv_scalar, psi_expand_scalar,
                          affine_scalar};
#if defined(GEM_HAVE_AVX2)
constexpr Kernels kAvx2{Isa::avx2, dot_avx2, axpy_avx2, gemv_avx2, psi_expand_avx2, affine_avx2};
#endif
#if defined(GEM_HAVE_NEON)
constexpr Kernels kNeon{Isa::neon, dot_neon, axpy_neon, gemv_neon, psi_expand_neon, affine_neon};
#endif

const Kernels* table(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &kScalar;
    case Isa::avx2:
#if defined(GEM_HAVE_AVX2)
      if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &kAvx2;
#endif
      return nullptr;
    case Isa::neon:
#if defined(GEM_HAVE_NEON)
      return &kNeon;
#endif
      return nullptr;
  }
  return nullptr;
}

const Kernels* pick_default() {
  if (const char* forced = std::getenv("GEM_SIMD")) {
    const std::string want(forced);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == name(isa)) {
        if (const Kernels* k = table(isa)) return k;
        log::warning("GEM_SIMD=" + want + " is not supported on this machine; using default");
      }
    }
  }
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (const Kernels* k = table(isa)) return k;
  }
  return &kScalar;
}

std::atomic<const Kernels*>& active_slot() {
  static std::atomic<const Kernels*> slot{pick_default()};
  return slot;
}

}  // namespace

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

bool supported(Isa isa) { return table(isa) != nullptr; }

std::vector<Isa> available() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (supported(isa)) out.push_back(isa);
  }
  return out;
}

const Kernels& kernels_for(Isa isa) {
  const Kernels* k = table(isa);
  if (!k) throw ConfigError("SIMD backend '" + std::string(name(isa)) + "' is not available");
  return *k;
}

const Kernels& kernels() { return *active_slot().load(std::memory_order_relaxed); }

void select(Isa isa) { active_slot().store(&kernels_for(isa)); }

}  // namespace gem::simd
