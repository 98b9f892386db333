#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace gem {

/// Seeded generator with distributions implemented here rather than taken
/// from <random>, whose distribution algorithms differ between standard
/// libraries. Every stream is reproducible from its seed on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();

  /// Standard normal via Box-Muller.
  double normal();

  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Mixes a base seed with a stream tag so sibling streams are decorrelated.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace gem
