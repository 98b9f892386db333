#include "gem/rff.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "gem/error.hpp"
#include "gem/rng.hpp"
#include "gem/simd/kernels.hpp"

namespace gem {

RffMap::RffMap(std::size_t input_dim, std::size_t features, double sigma, std::uint64_t seed)
    : input_dim_(input_dim), sigma_(sigma), seed_(seed) {
  if (features < 1) throw ConfigError("random feature count must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("kernel bandwidth sigma must be positive");
  if (input_dim < 1) throw ConfigError("input dimension must be positive");

  Rng rng(seed);
  const double inv_sigma = 1.0 / sigma;
  frequencies_.resize(static_cast<Eigen::Index>(features), static_cast<Eigen::Index>(input_dim));
  for (Eigen::Index r = 0; r < frequencies_.rows(); ++r) {
    for (Eigen::Index c = 0; c < frequencies_.cols(); ++c) frequencies_(r, c) = rng.normal() * inv_sigma;
  }
  constexpr double two_pi = 2.0 * std::numbers::pi;
  phases_.resize(static_cast<Eigen::Index>(features));
  for (Eigen::Index r = 0; r < phases_.size(); ++r) {
    double b = two_pi * rng.uniform();
    if (b >= two_pi) b = 0.0;
    phases_[r] = b;
  }
}

Vector RffMap::apply(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    throw DimensionError("random feature map expects " + std::to_string(input_dim_) + " inputs, got " +
                         std::to_string(x.size()));
  }
  const std::size_t D = output_dim();
  Vector z(static_cast<Eigen::Index>(D));
  simd::kernels().gemv(frequencies_.data(), D, input_dim_, x.data(), z.data());
  const double scale = std::sqrt(2.0 / static_cast<double>(D));
  for (Eigen::Index r = 0; r < z.size(); ++r) z[r] = scale * std::cos(z[r] + phases_[r]);
  return z;
}

RowMatrix RffMap::apply(const RowMatrix& X) const {
  if (static_cast<std::size_t>(X.cols()) != input_dim_) {
    throw DimensionError("random feature map expects " + std::to_string(input_dim_) + " inputs, got " +
                         std::to_string(X.cols()));
  }
  RowMatrix Z = X * frequencies_.transpose();
  const double scale = std::sqrt(2.0 / static_cast<double>(output_dim()));
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    for (Eigen::Index r = 0; r < Z.cols(); ++r) Z(i, r) = scale * std::cos(Z(i, r) + phases_[r]);
  }
  return Z;
}

}  // namespace gem
