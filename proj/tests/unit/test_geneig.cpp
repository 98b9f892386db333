#include <doctest.h>

#include <cmath>

#include "gem/error.hpp"
#include "gem/geneig.hpp"
#include "gem/moments.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace gem;

namespace {

double spectral_norm(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void check_contract(const Matrix& S, const Matrix& N, const EigenPairSet& e) {
  const double nS = spectral_norm(S), nN = spectral_norm(N);
  const auto d = S.rows();
  for (Eigen::Index q = 0; q < d; ++q) {
    const Vector v = e.vectors.col(q);
    const double lambda = e.values[q];
    CHECK((S * v - lambda * N * v).norm() <= 1e-8 * (nS + std::abs(lambda) * nN));
    CHECK(std::abs(v.dot(N * v) - 1.0) <= 1e-8);
    for (Eigen::Index p = 0; p < q; ++p) CHECK(std::abs(e.vectors.col(p).dot(N * v)) <= 1e-8);
    if (q > 0) CHECK(e.values[q - 1] >= e.values[q]);
  }
}

}  // namespace

TEST_SUITE("geneig") {
  TEST_CASE("identity pair") {
    const Matrix I = Matrix::Identity(4, 4);
    const auto e = solve_pair(I, I);
    for (Eigen::Index q = 0; q < 4; ++q) CHECK(e.values[q] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK((e.vectors.transpose() * e.vectors - I).norm() <= 1e-12);
  }

  TEST_CASE("diagonal pair") {
    Matrix S = Matrix::Zero(2, 2);
    S.diagonal() << 1, 4;
    const auto e = solve_pair(S, Matrix::Identity(2, 2), 0, 1);
    CHECK(e.values[0] == doctest::Approx(4.0));
    CHECK(e.values[1] == doctest::Approx(1.0));
    CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(e.vectors(0, 1)) == doctest::Approx(1.0));
    CHECK(e.numerator == 0);
    CHECK(e.denominator == 1);
  }

  TEST_CASE("random SPD pairs satisfy residual, normalization and oracle checks") {
    Rng rng(101);
    for (int t = 0; t < 25; ++t) {
      const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.below(11));
      const Matrix S = test::random_spd(d, rng);
      const Matrix N = test::random_spd(d, rng);
      const auto e = solve_pair(S, N);
      check_contract(S, N, e);
      const auto oracle = test::brute_generalized_eigenvalues(S, N);
      for (Eigen::Index q = 0; q < d; ++q) {
        CHECK(std::abs(e.values[q] - oracle[static_cast<std::size_t>(q)]) <= 1e-8 * std::max(1.0, std::abs(oracle[q])));
      }
      CHECK(solve_quotient(S, N).values == e.values);
    }
  }

  TEST_CASE("top vector maximizes the quotient") {
    Rng rng(103);
    const Matrix S = test::random_spd(8, rng);
    const Matrix N = test::random_spd(8, rng);
    const auto e = solve_pair(S, N);
    for (int t = 0; t < 1000; ++t) {
      Vector v(8);
      for (auto& x : v) x = rng.normal();
      v.normalize();
      CHECK(v.dot(S * v) / v.dot(N * v) <= e.values[0] + 1e-8);
    }
  }

  TEST_CASE("swapped pair has reciprocal spectrum") {
    Rng rng(107);
    for (int t = 0; t < 10; ++t) {
      const Matrix S = test::random_spd(6, rng);
      const Matrix N = test::random_spd(6, rng);
      const auto a = solve_pair(S, N);
      const auto b = solve_pair(N, S);
      for (Eigen::Index q = 0; q < 6; ++q) {
        CHECK(std::abs(a.values[q] - 1.0 / b.values[5 - q]) <= 1e-8 * std::max(1.0, a.values[q]));
      }
    }
  }

  TEST_CASE("scaling the numerator scales the spectrum") {
    Rng rng(109);
    const Matrix S = test::random_spd(5, rng);
    const Matrix N = test::random_spd(5, rng);
    const auto a = solve_pair(S, N);
    const auto b = solve_pair(3.5 * S, N);
    for (Eigen::Index q = 0; q < 5; ++q) {
      CHECK(b.values[q] == doctest::Approx(3.5 * a.values[q]).epsilon(1e-10));
      CHECK(test::abs_cosine(a.vectors.col(q), b.vectors.col(q)) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  TEST_CASE("errors") {
    Matrix S = Matrix::Identity(3, 3);
    Matrix N = Matrix::Identity(3, 3);
    N(2, 2) = -1.0;
    CHECK_THROWS_AS(solve_pair(S, N), CholeskyError);
    CHECK_THROWS_AS(solve_pair(S, Matrix::Zero(3, 3)), CholeskyError);
    CHECK_THROWS_AS(solve_pair(S, Matrix::Identity(2, 2)), DimensionError);
    Matrix A = Matrix::Identity(3, 3);
    A(0, 1) = 0.5;
    CHECK_THROWS_AS(solve_pair(A, Matrix::Identity(3, 3)), DimensionError);
    CHECK_THROWS_AS(solve_pair(Matrix::Identity(2, 3), Matrix::Identity(2, 3)), DimensionError);
  }

  TEST_CASE("select_detectors thresholds and caps") {
    EigenPairSet e;
    e.values = Vector(3);
    e.values << 3.0, 1.2, 0.9;
    e.vectors = Matrix::Identity(3, 3);
    e.numerator = 2;
    e.denominator = 0;
    auto d = select_detectors(e, 1.1, 5);
    REQUIRE(d.size() == 2);
    CHECK(d[0].lambda == 3.0);
    CHECK(d[1].lambda == 1.2);
    CHECK(d[1].rank == 1);
    CHECK(d[0].numerator == 2);
    CHECK(select_detectors(e, 1.1, 1).size() == 1);
    CHECK(select_detectors(e, 0.0, 3).size() == 3);
    CHECK(select_detectors(e, 5.0, 3).empty());
    CHECK_THROWS_AS(select_detectors(e, -1.0, 3), ConfigError);
    CHECK_THROWS_AS(select_detectors(e, 1.0, 0), ConfigError);
  }

  TEST_CASE("canonical sign makes the numerator-class mean projection nonnegative") {
    Rng rng(113);
    RowMatrix X = test::gaussian_matrix(40, 3, rng);
    X.col(0).array() += 2.0;
    std::vector<std::size_t> rows(40);
    for (std::size_t i = 0; i < 40; ++i) rows[i] = i;
    const SignReference ref{X, rows};
    Vector v(3);
    v << -1.0, 0.2, 0.1;
    CHECK(canonical_sign(v, ref) == -1);
    CHECK(canonical_sign(Vector(-v), ref) == 1);

    // Mean exactly zero: symmetric pair of points decides by the third moment,
    // which is then also zero, so the default +1 applies.
    RowMatrix Z(2, 1);
    Z << 1.0, -1.0;
    const std::vector<std::size_t> both = {0, 1};
    Vector u(1);
    u << 1.0;
    CHECK(canonical_sign(u, SignReference{Z, both}) == 1);

    // Mean zero but skewed: third moment picks the sign.
    RowMatrix W(3, 1);
    W << 2.0, -1.0, -1.0;
    const std::vector<std::size_t> three = {0, 1, 2};
    CHECK(canonical_sign(u, SignReference{W, three}) == 1);
    CHECK(canonical_sign(Vector(-u), SignReference{W, three}) == -1);
  }

  TEST_CASE("fallback sign uses the largest entry") {
    Vector v(3);
    v << 0.1, -0.9, 0.5;
    CHECK(fallback_sign(v) == -1);
    CHECK(fallback_sign(Vector(-v)) == 1);
  }

  TEST_CASE("same-pair detectors are uncorrelated under the denominator") {
    const auto data = test::gaussian_task(3000, 3, 6, 5);
    const auto stats = compute_moments(data.matrix(), data.labels, 3);
    for (double gamma : {0.0, 0.3}) {
      const Matrix N = regularize(stats.finalize(1), gamma).matrix;
      const auto e = solve_pair(stats.finalize(0), N, 0, 1);
      const auto dets = select_detectors(e, 0.0, 6);
      for (std::size_t a = 0; a < dets.size(); ++a) {
        for (std::size_t b = a + 1; b < dets.size(); ++b) CHECK(std::abs(dets[a].v.dot(N * dets[b].v)) <= 1e-8);
      }
    }
  }

  TEST_CASE("projections are invariant under invertible input maps") {
    Rng rng(127);
    const auto data = test::gaussian_task(4000, 2, 5, 9);
    const Matrix A = test::random_invertible(5, 50.0, rng);
    const auto moved = test::transformed(data, A);
    std::vector<std::size_t> rows0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.labels[i] == 0) rows0.push_back(i);
    }
    auto detect = [&](const LabeledDataset& d) {
      const auto st = compute_moments(d.matrix(), d.labels, 2);
      const auto e = solve_pair(st.finalize(0), st.finalize(1), 0, 1);
      const SignReference ref{d.matrix(), rows0};
      return select_detectors(e, 0.0, 5, &ref);
    };
    const auto a = detect(data);
    const auto b = detect(moved);
    REQUIRE(a.size() == 5);
    for (std::size_t q = 0; q < 5; ++q) {
      CHECK(a[q].lambda == doctest::Approx(b[q].lambda).epsilon(1e-8));
      const Vector pa = data.matrix() * a[q].v;
      const Vector pb = moved.matrix() * b[q].v;
      CHECK((pa - pb).norm() <= 1e-6 * pa.norm());
    }
  }
}
