#include "gem/featmap.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "gem/error.hpp"
#include "gem/simd/kernels.hpp"

namespace gem {

double psi(double p, int alpha, int delta) {
  const double q = delta > 0 ? p : -p;
  const double base = q > 0.0 ? q : 0.0;
  switch (alpha) {
    case 1:
      return std::sqrt(base);
    case 2:
      return base;
    case 3:
      return base * std::sqrt(base);
    default:
      throw ConfigError("psi exponent alpha must be 1, 2 or 3");
  }
}

FeatureLayout::FeatureLayout(std::vector<Detector> detectors, std::size_t input_dim, bool passthrough)
    : detectors_(std::move(detectors)), input_dim_(input_dim), passthrough_(passthrough) {
  projection_.resize(static_cast<Eigen::Index>(detectors_.size()), static_cast<Eigen::Index>(input_dim));
  for (std::size_t t = 0; t < detectors_.size(); ++t) {
    if (static_cast<std::size_t>(detectors_[t].v.size()) != input_dim) {
      throw DimensionError("detector " + std::to_string(t) + " has the wrong dimension");
    }
    projection_.row(static_cast<Eigen::Index>(t)) = detectors_[t].v.transpose();
  }
}

Vector FeatureLayout::expand(std::span<const double> x) const {
  if (x.size() != input_dim_) {
    throw DimensionError("feature map expects " + std::to_string(input_dim_) + " inputs, got " +
                         std::to_string(x.size()));
  }
  const auto& k = simd::kernels();
  const std::size_t m = detectors_.size();
  std::vector<double> proj(m);
  k.gemv(projection_.data(), m, input_dim_, x.data(), proj.data());
  Vector out(static_cast<Eigen::Index>(width()));
  k.psi_expand(proj.data(), m, out.data());
  if (passthrough_) std::copy(x.begin(), x.end(), out.data() + kBasisWidth * m);
  return out;
}

RowMatrix FeatureLayout::expand(const RowMatrix& X) const {
  if (static_cast<std::size_t>(X.cols()) != input_dim_) {
    throw DimensionError("feature map expects " + std::to_string(input_dim_) + " inputs, got " +
                         std::to_string(X.cols()));
  }
  const auto& k = simd::kernels();
  const std::size_t m = detectors_.size();
  const RowMatrix proj = X * projection_.transpose();
  RowMatrix out(X.rows(), static_cast<Eigen::Index>(width()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    k.psi_expand(proj.row(i).data(), m, out.row(i).data());
    if (passthrough_) {
      std::copy(X.row(i).data(), X.row(i).data() + input_dim_, out.row(i).data() + kBasisWidth * m);
    }
  }
  return out;
}

void FeatureLayout::describe(std::ostream& out) const {
  out << "# column detector numerator denominator rank alpha delta\n";
  for (std::size_t t = 0; t < detectors_.size(); ++t) {
    const auto& det = detectors_[t];
    for (int delta : {1, -1}) {
      for (int alpha = 1; alpha <= 3; ++alpha) {
        out << feature_index(t, alpha, delta) << ' ' << t << ' ' << det.numerator + 1 << ' '
            << det.denominator + 1 << ' ' << det.rank << ' ' << alpha << ' ' << (delta > 0 ? "+1" : "-1") << '\n';
      }
    }
  }
  if (passthrough_) {
    for (std::size_t i = 0; i < input_dim_; ++i) out << kBasisWidth * detectors_.size() + i << " raw " << i << '\n';
  }
}

Standardizer Standardizer::fit(const RowMatrix& X) {
  Standardizer s;
  const Eigen::Index n = X.rows();
  s.shift = Vector::Zero(X.cols());
  s.scale = Vector::Ones(X.cols());
  if (n == 0) return s;
  s.shift = X.colwise().mean().transpose();
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double var = (X.col(c).array() - s.shift[c]).square().sum() / static_cast<double>(n);
    if (var > 0.0) s.scale[c] = 1.0 / std::sqrt(var);
  }
  return s;
}

void Standardizer::apply(RowMatrix& X) const {
  if (empty()) return;
  if (X.cols() != shift.size()) throw DimensionError("standardizer width mismatch");
  const auto& k = simd::kernels();
  const auto w = static_cast<std::size_t>(X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double* row = X.row(i).data();
    k.affine(row, shift.data(), scale.data(), row, w);
  }
}

void Standardizer::apply(std::span<double> x) const {
  if (empty()) return;
  if (static_cast<Eigen::Index>(x.size()) != shift.size()) throw DimensionError("standardizer width mismatch");
  simd::kernels().affine(x.data(), shift.data(), scale.data(), x.data(), x.size());
}

}  // namespace gem
