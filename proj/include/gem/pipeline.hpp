#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gem/classifier.hpp"
#include "gem/ingest.hpp"
#include "gem/model.hpp"

namespace gem {

struct RffSpec {
  std::size_t features = 4096;
  double sigma = 1.0;
  std::uint64_t seed = 0;

  friend bool operator==(const RffSpec&, const RffSpec&) = default;
};

/// gem: GEM layers on the raw input. gem_rff: an RFF stage, then GEM layers.
/// rff: RFF stage only (kernel baseline). linear: no preprocessing.
enum class Method { gem, gem_rff, rff, linear };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

struct PipelineSpec {
  Method method = Method::gem;
  /// One entry per GEM layer; two entries give deep GEM.
  std::vector<GemHyper> layers{GemHyper{}};
  std::size_t max_layers = 2;
  RffSpec rff;
  TrainOptions train;
  bool standardize = true;
  bool passthrough = false;
  bool append_bias = false;

  void validate() const;
};

/// Fits one GEM layer on (X, labels). Classes without examples have their
/// pairs dropped with a warning. Throws EmptyBankError when no eigenvalue
/// reaches theta.
GemLayer fit_layer(const RowMatrix& X, std::span<const std::uint32_t> labels, std::size_t classes,
                   const GemHyper& hyper, bool standardize = true, bool passthrough = false);

/// Full chain fit on a dense dataset; records train metrics.
GemModel fit(const LabeledDataset& data, const PipelineSpec& spec);

GemModel fit_gem(const LabeledDataset& data, const GemHyper& hyper, double l2 = 1e-4);
GemModel fit_deep_gem(const LabeledDataset& data, const GemHyper& layer1, const GemHyper& layer2, double l2 = 1e-4);
GemModel fit_gem_rff(const LabeledDataset& data, const RffSpec& rff, const GemHyper& hyper, double l2 = 1e-4);

/// n_members fits whose pair seeds are base_seed + m for every layer.
/// Requires a randomized pair strategy in every layer.
std::vector<GemModel> fit_ensemble(const LabeledDataset& data, const PipelineSpec& spec, std::size_t n_members,
                                   std::uint64_t base_seed);

/// Geometric-mean combination of the members' probabilities.
RowMatrix predict_proba(std::span<const GemModel> members, const RowMatrix& X);

struct SearchTrial {
  PipelineSpec spec;
  Metrics validation;
};

struct SearchResult {
  std::vector<SearchTrial> trials;
  std::size_t best = 0;
};

/// Fits every candidate on train and scores it on validation. The candidate
/// with the lowest validation cross-entropy wins; ties go to the earlier one.
/// Candidates whose fit fails with an EmptyBankError or CholeskyError are
/// recorded with infinite cross-entropy.
SearchResult grid_search(const LabeledDataset& train, const LabeledDataset& validation,
                         std::span<const PipelineSpec> candidates);

}  // namespace gem
