#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "gem/linalg.hpp"

namespace gem {

/// Random Fourier features for k(x, y) = exp(-||x - y||^2 / (2 sigma^2)):
/// z_r(x) = sqrt(2 / D) cos(w_r^T x + b_r), w_r ~ N(0, sigma^-2 I), b_r ~ U[0, 2 pi).
///
/// W and b are a pure function of (d, D, sigma, seed): frequencies are drawn
/// row by row, then the phases.
class RffMap {
 public:
  RffMap() = default;
  RffMap(std::size_t input_dim, std::size_t features, double sigma, std::uint64_t seed);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return static_cast<std::size_t>(frequencies_.rows()); }
  double sigma() const { return sigma_; }
  std::uint64_t seed() const { return seed_; }

  /// D x d
  const RowMatrix& frequencies() const { return frequencies_; }
  const Vector& phases() const { return phases_; }

  Vector apply(std::span<const double> x) const;
  RowMatrix apply(const RowMatrix& X) const;

 private:
  std::size_t input_dim_ = 0;
  double sigma_ = 1.0;
  std::uint64_t seed_ = 0;
  RowMatrix frequencies_;
  Vector phases_;
};

inline RffMap sample_map(std::size_t input_dim, std::size_t features, double sigma, std::uint64_t seed) {
  return RffMap(input_dim, features, sigma, seed);
}

}  // namespace gem
