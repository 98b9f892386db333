#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gem/error.hpp"
#include "gem/rff.hpp"
#include "support/synth.hpp"

using namespace gem;

namespace {

double max_kernel_error(std::size_t D, std::uint64_t map_seed) {
  constexpr double sigma = 1.5;
  const RffMap map(4, D, sigma, map_seed);
  Rng rng(77);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Vector x(4), y(4);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = x[&v - y.data()] + 0.8 * rng.normal();
    const Vector zx = map.apply(std::span<const double>(x.data(), 4));
    const Vector zy = map.apply(std::span<const double>(y.data(), 4));
    const double exact = std::exp(-(x - y).squaredNorm() / (2 * sigma * sigma));
    worst = std::max(worst, std::abs(zx.dot(zy) - exact));
  }
  return worst;
}

}  // namespace

TEST_SUITE("rff") {
  TEST_CASE("map is a pure function of its parameters") {
    const RffMap a(3, 64, 0.7, 5), b(3, 64, 0.7, 5), c(3, 64, 0.7, 6);
    CHECK(a.frequencies() == b.frequencies());
    CHECK(a.phases() == b.phases());
    CHECK(a.frequencies() != c.frequencies());
    CHECK(sample_map(3, 64, 0.7, 5).phases() == a.phases());
  }

  TEST_CASE("frequency spread is 1/sigma") {
    const double sigma = 2.5;
    const RffMap m(50, 4000, sigma, 1);  // 2e5 draws
    const auto& W = m.frequencies();
    const double n = static_cast<double>(W.size());
    const double mean = W.mean();
    const double sd = std::sqrt((W.array() - mean).square().sum() / (n - 1));
    // Standard error of a normal sample standard deviation: s / sqrt(2(n - 1)).
    const double se = (1.0 / sigma) / std::sqrt(2.0 * (n - 1));
    CHECK(std::abs(sd - 1.0 / sigma) <= 3.0 * se);
    CHECK(std::abs(mean) <= 3.0 * (1.0 / sigma) / std::sqrt(n));
  }

  TEST_CASE("phases lie in [0, 2pi)") {
    const RffMap m(2, 5000, 1.0, 3);
    CHECK(m.phases().minCoeff() >= 0.0);
    CHECK(m.phases().maxCoeff() < 2.0 * std::numbers::pi);
  }

  TEST_CASE("outputs are bounded and the zero input maps to the phases") {
    const std::size_t D = 256;
    const RffMap m(3, D, 0.5, 4);
    const double bound = std::sqrt(2.0 / D);
    Rng rng(5);
    const RowMatrix X = test::gaussian_matrix(20, 3, rng);
    const RowMatrix Z = m.apply(X);
    CHECK(Z.cwiseAbs().maxCoeff() <= bound);
    const double zero[3] = {0, 0, 0};
    const Vector z0 = m.apply(zero);
    for (std::size_t r = 0; r < D; ++r) CHECK(z0[r] == bound * std::cos(m.phases()[r]));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const Vector zi = m.apply(std::span<const double>(X.row(i).data(), 3));
      CHECK((zi - Z.row(i).transpose()).cwiseAbs().maxCoeff() <= 1e-13);
    }
  }

  TEST_CASE("self inner product concentrates at one") {
    const RffMap m(5, 4096, 1.0, 8);
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
      Vector x(5);
      for (auto& v : x) v = rng.normal();
      const Vector z = m.apply(std::span<const double>(x.data(), 5));
      CHECK(std::abs(z.squaredNorm() - 1.0) <= 0.05);
    }
  }

  TEST_CASE("kernel error shrinks with more features") {
    const double e1024 = max_kernel_error(1024, 21);
    const double e4096 = max_kernel_error(4096, 21);
    MESSAGE("max kernel error D=1024: " << e1024 << ", D=4096: " << e4096);
    CHECK(e4096 <= 0.05);
    CHECK(e4096 <= e1024);
  }

  TEST_CASE("argument checks") {
    CHECK_THROWS_AS(RffMap(2, 0, 1.0, 0), ConfigError);
    CHECK_THROWS_AS(RffMap(2, 8, 0.0, 0), ConfigError);
    CHECK_THROWS_AS(RffMap(2, 8, -1.0, 0), ConfigError);
    const RffMap m(2, 8, 1.0, 0);
    const double x[3] = {1, 2, 3};
    CHECK_THROWS_AS(m.apply(x), DimensionError);
  }
}
