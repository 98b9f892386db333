#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "gem/linalg.hpp"

namespace gem {

/// Per-class running sums of outer products x x^T and example counts.
///
/// Only the upper triangle of each scatter matrix is accumulated; the lower
/// triangle stays zero and finalize() mirrors it, so the finalized second
/// moment is exactly symmetric. Accumulators are single-writer: shard the
/// data, accumulate independently, then merge().
class MomentStats {
 public:
  MomentStats() = default;
  MomentStats(std::size_t dim, std::size_t classes);

  std::size_t dim() const { return dim_; }
  std::size_t classes() const { return counts_.size(); }
  std::uint64_t count(std::size_t label) const { return counts_.at(label); }

  /// Upper-triangular accumulator for one class.
  const RowMatrix& scatter(std::size_t label) const { return scatter_.at(label); }

  /// Adds x x^T to the scatter of class `label`.
  void accumulate(std::span<const double> x, std::size_t label);

  /// Adds every row of X to the class given by the matching entry of labels.
  /// Rows are folded into the scatter in blocks with a symmetric rank-k update.
  void accumulate_rows(const RowMatrix& X, std::span<const std::uint32_t> labels);

  MomentStats& merge(const MomentStats& other);

  /// Empirical second moment scatter / count, exactly symmetric.
  /// Throws EmptyClassError when the class has no examples.
  Matrix finalize(std::size_t label) const;

  /// Versioned little-endian snapshot: magic, version, d, k, then per class
  /// the count followed by the row-major upper triangle of the scatter.
  std::vector<std::uint8_t> serialize() const;
  static MomentStats deserialize(std::span<const std::uint8_t> bytes);

  friend bool operator==(const MomentStats&, const MomentStats&) = default;
  friend MomentStats compute_moments(const RowMatrix&, std::span<const std::uint32_t>, std::size_t);

 private:
  std::size_t dim_ = 0;
  std::vector<RowMatrix> scatter_;
  std::vector<std::uint64_t> counts_;
};

MomentStats merge(MomentStats a, const MomentStats& b);

/// Class-conditional moments of a whole dataset. Classes are processed in
/// parallel; the result does not depend on the worker count.
MomentStats compute_moments(const RowMatrix& X, std::span<const std::uint32_t> labels, std::size_t classes);

/// Trace-scaled ridge C + (gamma / d) Tr(C) I.
struct RegularizedMoment {
  Matrix matrix;
  std::size_t source_class = std::numeric_limits<std::size_t>::max();
  double gamma = 0.0;
};

RegularizedMoment regularize(const Matrix& C, double gamma,
                             std::size_t source_class = std::numeric_limits<std::size_t>::max());

}  // namespace gem
