#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "gem/geneig.hpp"
#include "gem/linalg.hpp"

namespace gem {

/// Responses per detector: alpha in {1,2,3} times delta in {+1,-1}.
inline constexpr std::size_t kBasisWidth = 6;

/// max(0, delta * p)^(alpha / 2)
double psi(double p, int alpha, int delta);

/// Output column of (detector, alpha, delta): detectors in bank order, the
/// delta = +1 block before the delta = -1 block, alpha ascending.
constexpr std::size_t feature_index(std::size_t detector, int alpha, int delta) {
  return kBasisWidth * detector + (delta > 0 ? 0 : 3) + static_cast<std::size_t>(alpha - 1);
}

/// Immutable map x -> [psi(v^T x, alpha, delta)] over a detector bank,
/// optionally followed by the raw input.
class FeatureLayout {
 public:
  FeatureLayout() = default;
  FeatureLayout(std::vector<Detector> detectors, std::size_t input_dim, bool passthrough = false);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t detector_count() const { return detectors_.size(); }
  std::size_t width() const { return kBasisWidth * detectors_.size() + (passthrough_ ? input_dim_ : 0); }
  bool passthrough() const { return passthrough_; }
  const std::vector<Detector>& detectors() const { return detectors_; }

  /// Detector vectors as rows.
  const RowMatrix& projection() const { return projection_; }

  Vector expand(std::span<const double> x) const;
  RowMatrix expand(const RowMatrix& X) const;

  /// One line per output column: index, detector, pair, rank, alpha, delta.
  void describe(std::ostream& out) const;

 private:
  std::vector<Detector> detectors_;
  RowMatrix projection_;
  std::size_t input_dim_ = 0;
  bool passthrough_ = false;
};

/// Per-column z-scoring fitted on training features. Constant columns map
/// to zero.
struct Standardizer {
  Vector shift;
  Vector scale;

  bool empty() const { return shift.size() == 0; }
  static Standardizer fit(const RowMatrix& X);
  void apply(RowMatrix& X) const;
  void apply(std::span<double> x) const;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

}  // namespace gem
