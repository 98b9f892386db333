#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gem/linalg.hpp"

namespace gem {

/// Examples with 0-based class indices. label_names[c] is the on-disk label
/// of class c; integer-valued labels are canonicalized ("+1", "1.0" -> "1")
/// and sorted numerically, anything else lexicographically.
struct LabeledDataset {
  std::variant<RowMatrix, SparseRowMatrix> features;
  std::vector<std::uint32_t> labels;
  std::vector<std::string> label_names;
  std::string tag;
  /// Image geometry declared by the source file (idx), zero when unknown.
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const;
  std::size_t classes() const { return label_names.size(); }
  bool is_sparse() const { return std::holds_alternative<SparseRowMatrix>(features); }

  /// Dense feature matrix; throws if the storage is sparse.
  const RowMatrix& matrix() const;
  /// Converts sparse storage to dense in place.
  void make_dense();

  LabeledDataset subset(std::span<const std::size_t> rows) const;
};

enum class DataFormat { csv, libsvm, idx };

DataFormat parse_data_format(std::string_view text);
std::string_view to_string(DataFormat f);

/// Label-first comma-separated rows; '#' lines and blank lines are skipped.
LabeledDataset read_csv(std::istream& in);
/// "label index:value ..." with 1-based ascending indices; kept sparse.
LabeledDataset read_libsvm(std::istream& in);
/// idx3-ubyte images with idx1-ubyte labels, gzip or plain; pixels scaled to [0, 1].
LabeledDataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Dispatches on format. labels_path is required for idx only.
LabeledDataset load(const std::filesystem::path& path, DataFormat format,
                    const std::filesystem::path& labels_path = {});

/// Shortest round-trip decimal representation for every value.
void write_csv(std::ostream& out, const LabeledDataset& data);
void write_libsvm(std::ostream& out, const LabeledDataset& data);

/// Re-indexes labels against a fixed label map. Throws LabelError for
/// labels that are not in `names`.
void remap_labels(LabeledDataset& data, const std::vector<std::string>& names);

/// Seeded permutation followed by contiguous slices with sizes
/// round(n * cumulative fraction). Fractions must be nonnegative and sum to 1.
std::vector<LabeledDataset> split(const LabeledDataset& data, std::span<const double> fractions, std::uint64_t seed);

/// Row-wise concatenation of two datasets that share a label map and width.
LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b);

/// Appends a constant 1 feature to every example.
void append_bias(LabeledDataset& data);

/// Canonical label spelling (see LabeledDataset).
std::string canonical_label(std::string_view raw);

}  // namespace gem
