#include "gem/geneig.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gem/error.hpp"
#include "gem/simd/kernels.hpp"

namespace gem {
namespace {

constexpr double kSymmetryTolerance = 1e-10;

void check_symmetric(const Matrix& A, const char* which) {
  if (A.rows() != A.cols()) throw DimensionError(std::string(which) + " matrix is not square");
  if (!A.allFinite()) throw NonFiniteError(std::string(which) + " matrix has non-finite entries");
  const double scale = A.cwiseAbs().maxCoeff();
  const double skew = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (skew > kSymmetryTolerance * scale) {
    throw DimensionError(std::string(which) + " matrix is not symmetric (max skew " + std::to_string(skew) + ")");
  }
}

}  // namespace

EigenPairSet solve_pair(const Matrix& S, const Matrix& N, std::size_t numerator, std::size_t denominator) {
  check_symmetric(S, "signal");
  check_symmetric(N, "noise");
  if (S.rows() != N.rows()) throw DimensionError("signal and noise matrices differ in size");

  const Matrix Ns = 0.5 * (N + N.transpose());
  Eigen::LLT<Matrix> llt(Ns);
  if (llt.info() != Eigen::Success) {
    throw CholeskyError("denominator matrix is not positive definite; increase gamma");
  }
  const auto L = llt.matrixL();

  // M = L^{-1} S L^{-T}
  const Matrix Ss = 0.5 * (S + S.transpose());
  const Matrix left = L.solve(Ss);
  Matrix M = L.solve(left.transpose());
  M = 0.5 * (M + M.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
  if (eig.info() != Eigen::Success) throw Error("symmetric eigensolver did not converge");

  EigenPairSet out;
  out.numerator = numerator;
  out.denominator = denominator;
  out.values = eig.eigenvalues().reverse();
  const Matrix U = eig.eigenvectors().rowwise().reverse();
  out.vectors = llt.matrixU().solve(U);
  return out;
}

EigenPairSet solve_quotient(const Matrix& S, const Matrix& N) { return solve_pair(S, N); }

int canonical_sign(const Vector& v, const SignReference& ref) {
  if (ref.rows.empty()) return fallback_sign(v);
  if (static_cast<Eigen::Index>(ref.data.cols()) != v.size()) throw DimensionError("sign reference width mismatch");
  const auto& k = simd::kernels();
  const auto d = static_cast<std::size_t>(v.size());
  double first = 0.0;
  double third = 0.0;
  for (std::size_t r : ref.rows) {
    const double p = k.dot(v.data(), ref.data.row(static_cast<Eigen::Index>(r)).data(), d);
    first += p;
    third += p * p * p;
  }
  if (first > 0.0) return 1;
  if (first < 0.0) return -1;
  if (third < 0.0) return -1;
  return 1;
}

int fallback_sign(const Vector& v) {
  Eigen::Index best = 0;
  double mag = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > mag) {
      mag = std::abs(v[i]);
      best = i;
    }
  }
  return v.size() == 0 || v[best] >= 0.0 ? 1 : -1;
}

std::vector<Detector> select_detectors(const EigenPairSet& eigs, double theta, std::size_t m_max,
                                       const SignReference* ref) {
  if (!(theta >= 0.0)) throw ConfigError("theta must be nonnegative");
  if (m_max < 1) throw ConfigError("m_max must be at least 1");
  std::vector<Detector> out;
  const auto count = static_cast<std::size_t>(eigs.values.size());
  for (std::size_t q = 0; q < count && out.size() < m_max; ++q) {
    const double lambda = eigs.values[static_cast<Eigen::Index>(q)];
    if (!(lambda >= theta)) break;
    Detector det;
    det.v = eigs.vectors.col(static_cast<Eigen::Index>(q));
    const int sign = ref ? canonical_sign(det.v, *ref) : fallback_sign(det.v);
    if (sign < 0) det.v = -det.v;
    det.lambda = lambda;
    det.numerator = eigs.numerator;
    det.denominator = eigs.denominator;
    det.rank = q;
    out.push_back(std::move(det));
  }
  return out;
}

}  // namespace gem
