#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "gem/linalg.hpp"

namespace gem {

inline constexpr std::size_t kNoClass = std::numeric_limits<std::size_t>::max();

/// Full generalized spectrum of a symmetric-definite pair (S, N).
/// values are descending; column q of vectors solves S v = values[q] N v and
/// is scaled so that v^T N v = 1.
struct EigenPairSet {
  Vector values;
  Matrix vectors;
  std::size_t numerator = kNoClass;
  std::size_t denominator = kNoClass;
};

/// A selected generalized eigenvector. rank is its position (0-based) in the
/// descending spectrum of its pair.
struct Detector {
  Vector v;
  double lambda = 0.0;
  std::size_t numerator = kNoClass;
  std::size_t denominator = kNoClass;
  std::size_t rank = 0;

  friend bool operator==(const Detector&, const Detector&) = default;
};

/// Solves S v = lambda N v by Cholesky reduction N = L L^T, a symmetric
/// eigensolve of L^{-1} S L^{-T}, and the back-transform v = L^{-T} u.
/// Throws CholeskyError if N is not positive definite and DimensionError if
/// either matrix is non-square, mismatched, or asymmetric beyond roundoff.
EigenPairSet solve_pair(const Matrix& S, const Matrix& N, std::size_t numerator = kNoClass,
                        std::size_t denominator = kNoClass);

/// Maximizes the generic signal-to-noise quotient v^T S v / v^T N v; same
/// contract as solve_pair.
EigenPairSet solve_quotient(const Matrix& S, const Matrix& N);

/// Numerator-class examples used to fix detector signs.
struct SignReference {
  const RowMatrix& data;
  std::span<const std::size_t> rows;
};

/// +1 or -1 such that the empirical mean projection sign * v^T x over the
/// reference rows is nonnegative. A mean of exactly zero defers to the
/// third moment, then to +1.
int canonical_sign(const Vector& v, const SignReference& ref);

/// Sign rule used when no data is available: the largest-magnitude entry
/// (first on ties) is made positive. Not invariant under input transforms.
int fallback_sign(const Vector& v);

/// The first min(m_max, #{q : lambda_q >= theta}) eigenvectors in descending
/// order, sign-canonicalized against ref when given.
std::vector<Detector> select_detectors(const EigenPairSet& eigs, double theta, std::size_t m_max,
                                       const SignReference* ref = nullptr);

}  // namespace gem
