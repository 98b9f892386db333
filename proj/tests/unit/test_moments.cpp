#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gem/error.hpp"
#include "gem/moments.hpp"
#include "gem/parallel.hpp"
#include "gem/rng.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace gem;

namespace {

double rel_diff(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

MomentStats one_by_one(const RowMatrix& X, const std::vector<std::uint32_t>& y, std::size_t k) {
  MomentStats s(static_cast<std::size_t>(X.cols()), k);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    s.accumulate(std::span<const double>(X.row(i).data(), static_cast<std::size_t>(X.cols())), y[static_cast<std::size_t>(i)]);
  }
  return s;
}

}  // namespace

TEST_SUITE("moments") {
  TEST_CASE("single outer product") {
    MomentStats s(2, 1);
    const double x[2] = {1, 2};
    s.accumulate(x, 0);
    CHECK(s.count(0) == 1);
    const Matrix C = s.finalize(0);
    CHECK(C(0, 0) == 1);
    CHECK(C(0, 1) == 2);
    CHECK(C(1, 0) == 2);
    CHECK(C(1, 1) == 4);
  }

  TEST_CASE("zero vector only bumps the count") {
    MomentStats s(2, 2);
    const double x[2] = {1, 2}, z[2] = {0, 0};
    s.accumulate(x, 1);
    const RowMatrix before = s.scatter(1);
    s.accumulate(z, 1);
    CHECK(s.count(1) == 2);
    CHECK(s.scatter(1) == before);
    CHECK(s.count(0) == 0);
  }

  TEST_CASE("hand-computed finalize") {
    MomentStats s(2, 1);
    const double a[2] = {1, 0}, b[2] = {0, 1};
    s.accumulate(a, 0);
    s.accumulate(b, 0);
    const Matrix C = s.finalize(0);
    CHECK(C(0, 0) == 0.5);
    CHECK(C(1, 1) == 0.5);
    CHECK(C(0, 1) == 0.0);
  }

  TEST_CASE("streaming, batch and direct oracle agree") {
    Rng rng(3);
    const RowMatrix X = test::gaussian_matrix(50, 4, rng);
    std::vector<std::uint32_t> y(50);
    for (auto& v : y) v = static_cast<std::uint32_t>(rng.below(3));
    const MomentStats streamed = one_by_one(X, y, 3);
    MomentStats batched(4, 3);
    batched.accumulate_rows(X, y);
    const MomentStats parallel = compute_moments(X, y, 3);
    for (std::uint32_t c = 0; c < 3; ++c) {
      const Matrix oracle = test::direct_second_moment(X, y, c);
      CHECK(rel_diff(streamed.finalize(c), oracle) <= 1e-12);
      CHECK(rel_diff(batched.finalize(c), oracle) <= 1e-12);
      CHECK(rel_diff(parallel.finalize(c), oracle) <= 1e-12);
      CHECK(streamed.count(c) == parallel.count(c));
    }
  }

  TEST_CASE("merge identity and commutativity") {
    Rng rng(5);
    const RowMatrix X = test::gaussian_matrix(40, 3, rng);
    std::vector<std::uint32_t> y(40);
    for (auto& v : y) v = static_cast<std::uint32_t>(rng.below(2));
    const MomentStats a = one_by_one(X.topRows(20), {y.begin(), y.begin() + 20}, 2);
    const MomentStats b = one_by_one(X.bottomRows(20), {y.begin() + 20, y.end()}, 2);
    CHECK(merge(a, MomentStats(3, 2)) == a);
    const MomentStats ab = merge(a, b), ba = merge(b, a);
    CHECK(ab == ba);
    CHECK_THROWS_AS(merge(a, MomentStats(2, 2)), DimensionError);
    CHECK_THROWS_AS(merge(a, MomentStats(3, 3)), DimensionError);
  }

  TEST_CASE("seven shards merged in random order equal a single pass") {
    Rng rng(7);
    const RowMatrix X = test::gaussian_matrix(100, 5, rng);
    std::vector<std::uint32_t> y(100);
    for (auto& v : y) v = static_cast<std::uint32_t>(rng.below(3));
    const MomentStats whole = one_by_one(X, y, 3);

    std::vector<MomentStats> shards(7, MomentStats(5, 3));
    for (std::size_t i = 0; i < 100; ++i) {
      shards[rng.below(7)].accumulate(std::span<const double>(X.row(static_cast<Eigen::Index>(i)).data(), 5), y[i]);
    }
    std::vector<std::size_t> order(7);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    MomentStats total(5, 3);
    for (auto o : order) total.merge(shards[o]);
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(total.count(c) == whole.count(c));
      CHECK(rel_diff(total.finalize(c), whole.finalize(c)) <= 1e-12);
    }
  }

  TEST_CASE("finalize is exactly symmetric and positive semidefinite") {
    Rng rng(9);
    const RowMatrix X = test::gaussian_matrix(30, 6, rng) * 1e3;
    std::vector<std::uint32_t> y(30, 0);
    const Matrix C = compute_moments(X, y, 1).finalize(0);
    CHECK(C == C.transpose());
    for (int t = 0; t < 200; ++t) {
      Vector v(6);
      for (auto& e : v) e = rng.normal();
      v.normalize();
      CHECK(v.dot(C * v) >= -1e-10 * C.norm());
    }
  }

  TEST_CASE("accumulation order does not matter beyond roundoff") {
    Rng rng(13);
    RowMatrix X = test::gaussian_matrix(200, 4, rng);
    std::vector<std::uint32_t> y(200, 0);
    const Matrix a = compute_moments(X, y, 1).finalize(0);
    std::vector<Eigen::Index> perm(200);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span(perm));
    RowMatrix P(200, 4);
    for (Eigen::Index i = 0; i < 200; ++i) P.row(i) = X.row(perm[static_cast<std::size_t>(i)]);
    const Matrix b = one_by_one(P, y, 1).finalize(0);
    CHECK(rel_diff(a, b) <= 1e-10);
  }

  TEST_CASE("worker count does not change the result") {
    Rng rng(17);
    const RowMatrix X = test::gaussian_matrix(3000, 8, rng);
    std::vector<std::uint32_t> y(3000);
    for (auto& v : y) v = static_cast<std::uint32_t>(rng.below(4));
    set_num_threads(1);
    const MomentStats one = compute_moments(X, y, 4);
    set_num_threads(4);
    const MomentStats four = compute_moments(X, y, 4);
    set_num_threads(0);
    CHECK(one == four);
  }

  TEST_CASE("input validation") {
    MomentStats s(2, 2);
    const double good[2] = {1, 1}, wide[3] = {1, 1, 1};
    const double bad[2] = {1, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(s.accumulate(wide, 0), DimensionError);
    CHECK_THROWS_AS(s.accumulate(good, 2), LabelError);
    CHECK_THROWS_AS(s.accumulate(bad, 0), NonFiniteError);
    CHECK(s.count(0) == 0);
    CHECK_THROWS_AS(s.finalize(1), EmptyClassError);
  }

  TEST_CASE("regularize") {
    const RegularizedMoment r1 = regularize(Matrix::Identity(2, 2), 0.5, 0);
    CHECK((r1.matrix - 1.5 * Matrix::Identity(2, 2)).norm() == 0.0);
    CHECK(r1.gamma == 0.5);
    CHECK(r1.source_class == 0);
    Matrix C = Matrix::Zero(2, 2);
    C.diagonal() << 1, 3;
    CHECK(regularize(C, 0.0).matrix == C);
    const Matrix r3 = regularize(C, 1.0).matrix;
    CHECK(r3(0, 0) == 3.0);
    CHECK(r3(1, 1) == 5.0);
    CHECK(r3(0, 1) == 0.0);
    CHECK_THROWS_AS(regularize(C, -0.1), ConfigError);
  }

  TEST_CASE("regularized spectrum is bounded below by the ridge") {
    Rng rng(19);
    for (int t = 0; t < 20; ++t) {
      const RowMatrix X = test::gaussian_matrix(3, 6, rng);  // rank 3 in 6 dims
      std::vector<std::uint32_t> y(3, 0);
      const Matrix C = compute_moments(X, y, 1).finalize(0);
      const double gamma = 0.05 + rng.uniform();
      const Matrix R = regularize(C, gamma).matrix;
      const double floor = gamma / 6.0 * C.trace();
      Eigen::SelfAdjointEigenSolver<Matrix> es(R);
      CHECK(es.eigenvalues().minCoeff() >= floor - 1e-10 * C.norm());
    }
  }

  TEST_CASE("snapshot round trip is bit exact") {
    Rng rng(23);
    const RowMatrix X = test::gaussian_matrix(64, 5, rng);
    std::vector<std::uint32_t> y(64);
    for (auto& v : y) v = static_cast<std::uint32_t>(rng.below(3));
    const MomentStats s = compute_moments(X, y, 3);
    const auto bytes = s.serialize();
    CHECK(MomentStats::deserialize(bytes) == s);
    CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "GEMMOMNT");

    auto corrupt = bytes;
    corrupt[0] = 'X';
    CHECK_THROWS_AS(MomentStats::deserialize(corrupt), FormatError);
    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(MomentStats::deserialize(truncated), FormatError);
  }
}
