#include "gem/moments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gem/binary_io.hpp"
#include "gem/error.hpp"
#include "gem/parallel.hpp"
#include "gem/simd/kernels.hpp"

namespace gem {
namespace {

constexpr std::string_view kMagic = "GEMMOMNT";
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kBlockRows = 256;

void check_label(std::size_t label, std::size_t classes) {
  if (label >= classes) {
    throw LabelError("label " + std::to_string(label + 1) + " outside [1, " + std::to_string(classes) + "]");
  }
}

// Adds the selected rows of X to an upper-triangular scatter, one symmetric
// rank-k update per block.
void fold_rows(RowMatrix& scatter, const RowMatrix& X, std::span<const Eigen::Index> rows) {
  RowMatrix block;
  for (std::size_t start = 0; start < rows.size(); start += kBlockRows) {
    const std::size_t len = std::min(kBlockRows, rows.size() - start);
    block.resize(static_cast<Eigen::Index>(len), X.cols());
    for (std::size_t r = 0; r < len; ++r) block.row(static_cast<Eigen::Index>(r)) = X.row(rows[start + r]);
    scatter.selfadjointView<Eigen::Upper>().rankUpdate(block.transpose());
  }
}

}  // namespace

MomentStats::MomentStats(std::size_t dim, std::size_t classes)
    : dim_(dim), scatter_(classes, RowMatrix::Zero(dim, dim)), counts_(classes, 0) {}

void MomentStats::accumulate(std::span<const double> x, std::size_t label) {
  if (x.size() != dim_) {
    throw DimensionError("example has " + std::to_string(x.size()) + " features, expected " + std::to_string(dim_));
  }
  check_label(label, classes());
  for (double v : x) {
    if (!std::isfinite(v)) throw NonFiniteError("non-finite feature value");
  }
  const auto& k = simd::kernels();
  RowMatrix& s = scatter_[label];
  for (std::size_t p = 0; p < dim_; ++p) {
    if (x[p] != 0.0) k.axpy(x[p], x.data() + p, s.data() + p * dim_ + p, dim_ - p);
  }
  ++counts_[label];
}

void MomentStats::accumulate_rows(const RowMatrix& X, std::span<const std::uint32_t> labels) {
  if (static_cast<std::size_t>(X.cols()) != dim_) {
    throw DimensionError("rows have " + std::to_string(X.cols()) + " features, expected " + std::to_string(dim_));
  }
  if (static_cast<std::size_t>(X.rows()) != labels.size()) throw DimensionError("row and label counts differ");
  if (!X.allFinite()) throw NonFiniteError("non-finite feature value");
  for (auto y : labels) check_label(y, classes());

  std::vector<std::vector<Eigen::Index>> members(classes());
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(static_cast<Eigen::Index>(i));

  for (std::size_t c = 0; c < classes(); ++c) {
    fold_rows(scatter_[c], X, members[c]);
    counts_[c] += members[c].size();
  }
}

MomentStats& MomentStats::merge(const MomentStats& other) {
  if (other.dim_ != dim_ || other.classes() != classes()) {
    throw DimensionError("cannot merge moment statistics of different shapes");
  }
  for (std::size_t c = 0; c < classes(); ++c) {
    scatter_[c] += other.scatter_[c];
    counts_[c] += other.counts_[c];
  }
  return *this;
}

MomentStats merge(MomentStats a, const MomentStats& b) {
  a.merge(b);
  return a;
}

Matrix MomentStats::finalize(std::size_t label) const {
  check_label(label, classes());
  if (counts_[label] == 0) throw EmptyClassError(label);
  const double inv = 1.0 / static_cast<double>(counts_[label]);
  const RowMatrix& s = scatter_[label];
  Matrix out(dim_, dim_);
  for (std::size_t p = 0; p < dim_; ++p) {
    for (std::size_t q = p; q < dim_; ++q) {
      const double v = s(p, q) * inv;
      out(p, q) = v;
      out(q, p) = v;
    }
  }
  return out;
}

std::vector<std::uint8_t> MomentStats::serialize() const {
  ByteWriter w;
  w.raw(kMagic);
  w.u32(kVersion);
  w.u64(dim_);
  w.u64(classes());
  for (std::size_t c = 0; c < classes(); ++c) {
    w.u64(counts_[c]);
    for (std::size_t p = 0; p < dim_; ++p) {
      for (std::size_t q = p; q < dim_; ++q) w.f64(scatter_[c](p, q));
    }
  }
  return w.take();
}

MomentStats MomentStats::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.raw(kMagic.size()) != kMagic) throw FormatError("not a moment snapshot (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw FormatError("unsupported moment snapshot version " + std::to_string(version));
  const std::uint64_t d = r.u64();
  const std::uint64_t k = r.u64();
  const std::uint64_t per_class = 8 + 8 * (d * (d + 1) / 2);
  if (d > (1u << 20) || k == 0 || per_class * k != r.remaining()) throw FormatError("moment snapshot size mismatch");

  MomentStats out(d, k);
  for (std::size_t c = 0; c < k; ++c) {
    out.counts_[c] = r.u64();
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p; q < d; ++q) out.scatter_[c](p, q) = r.f64();
    }
  }
  return out;
}

MomentStats compute_moments(const RowMatrix& X, std::span<const std::uint32_t> labels, std::size_t classes) {
  if (static_cast<std::size_t>(X.rows()) != labels.size()) throw DimensionError("row and label counts differ");
  for (auto y : labels) check_label(y, classes);
  if (!X.allFinite()) throw NonFiniteError("non-finite feature value");

  MomentStats total(static_cast<std::size_t>(X.cols()), classes);
  // One worker per class; each touches only its own accumulator.
  parallel_for(classes, [&](std::size_t c) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) rows.push_back(static_cast<Eigen::Index>(i));
    }
    fold_rows(total.scatter_[c], X, rows);
    total.counts_[c] = rows.size();
  });
  return total;
}

RegularizedMoment regularize(const Matrix& C, double gamma, std::size_t source_class) {
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
  if (C.rows() != C.cols()) throw DimensionError("moment matrix must be square");
  RegularizedMoment out{C, source_class, gamma};
  if (gamma > 0.0 && C.rows() > 0) {
    const double ridge = gamma / static_cast<double>(C.rows()) * C.trace();
    out.matrix.diagonal().array() += ridge;
  }
  return out;
}

}  // namespace gem
