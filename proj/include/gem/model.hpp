#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gem/classifier.hpp"
#include "gem/featmap.hpp"
#include "gem/linalg.hpp"
#include "gem/pairsel.hpp"
#include "gem/rff.hpp"

namespace gem {

/// Hyperparameters of one GEM layer.
struct GemHyper {
  double gamma = 0.1;
  double theta = 1.0;
  std::size_t m_max = 3;
  PairSpec pairs;

  friend bool operator==(const GemHyper&, const GemHyper&) = default;
};

/// Detector bank plus the frozen standardization of its expanded outputs.
struct GemLayer {
  GemHyper hyper;
  PairPlan plan;
  FeatureLayout layout;
  Standardizer standardizer;  // empty when standardization is off

  std::size_t input_dim() const { return layout.input_dim(); }
  std::size_t output_dim() const { return layout.width(); }

  RowMatrix transform(const RowMatrix& X) const;
  Vector transform(std::span<const double> x) const;
};

/// Only (d, D, sigma, seed) are persisted; W and b are regenerated.
struct RffStage {
  RffMap map;

  std::size_t input_dim() const { return map.input_dim(); }
  std::size_t output_dim() const { return map.output_dim(); }
};

using Stage = std::variant<RffStage, GemLayer>;

std::size_t stage_input_dim(const Stage& s);
std::size_t stage_output_dim(const Stage& s);

/// Preprocessing chain followed by a multinomial logistic classifier.
struct GemModel {
  static constexpr std::uint32_t kVersion = 1;

  std::vector<std::string> label_names;
  bool append_bias = false;
  std::size_t input_dim = 0;
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
  std::vector<Stage> stages;
  MultiLogitModel classifier;
  /// Metrics of this model on its own training set, recorded at fit time.
  Metrics train_metrics;

  std::size_t classes() const { return label_names.size(); }

  /// Raw input -> classifier features. Throws DimensionError on width mismatch.
  RowMatrix transform(const RowMatrix& X) const;
  Vector transform(std::span<const double> x) const;

  RowMatrix predict_proba(const RowMatrix& X) const;
  Vector predict_proba(std::span<const double> x) const;

  /// GEM layers in chain order.
  std::vector<const GemLayer*> gem_layers() const;

  /// Throws FormatError unless adjacent stage widths agree.
  void check_widths() const;
};

/// Sectioned little-endian container:
///   "GEMMODEL" u32 version u32 section-count
///   { u32 tag, u64 byte-length, payload } ...
/// Tags: 1 meta, 2 rff stage, 3 gem layer, 4 classifier. Stage sections
/// appear in chain order.
std::vector<std::uint8_t> serialize(const GemModel& model);
GemModel deserialize(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const GemModel& model);
GemModel load_model(const std::filesystem::path& path);

/// One detector per row: "i j rank lambda v_1 ... v_d" with 1-based class
/// indices and shortest round-trip decimals, after a "# labels" header.
void write_detectors(std::ostream& out, const FeatureLayout& layout, const std::vector<std::string>& label_names);
std::vector<Detector> read_detectors(std::istream& in);

}  // namespace gem
