#include "gem/pipeline.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "gem/error.hpp"
#include "gem/geneig.hpp"
#include "gem/log.hpp"
#include "gem/moments.hpp"
#include "gem/parallel.hpp"

namespace gem {
namespace {

bool randomized(PairStrategy s) {
  return s == PairStrategy::hypercube || s == PairStrategy::random || s == PairStrategy::stratified;
}

GemLayer fit_layer_impl(const RowMatrix& X, std::span<const std::uint32_t> labels, std::size_t classes,
                        const GemHyper& hyper, bool standardize, bool passthrough, RowMatrix* features) {
  if (classes < 2) throw ConfigError("GEM needs at least two classes");
  if (!(hyper.gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
  if (!(hyper.theta >= 0.0)) throw ConfigError("theta must be nonnegative");
  if (hyper.m_max < 1) throw ConfigError("m_max must be at least 1");

  const MomentStats stats = compute_moments(X, labels, classes);
  GemLayer layer;
  layer.hyper = hyper;
  layer.plan = make_plan(hyper.pairs, classes);

  std::vector<ClassPair> pairs;
  for (const auto& p : layer.plan.pairs) {
    if (stats.count(p.numerator) == 0 || stats.count(p.denominator) == 0) continue;
    pairs.push_back(p);
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (stats.count(c) == 0) {
      log::warning("class " + std::to_string(c + 1) + " has no training examples; its pairs are skipped");
    }
  }
  if (pairs.empty()) throw EmptyBankError("no class pair has examples on both sides");

  // Second moments and regularized denominators for the classes in use.
  std::vector<Matrix> moment(classes);
  std::vector<Matrix> denom(classes);
  std::vector<std::vector<std::size_t>> rows(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) rows[labels[i]].push_back(i);
  parallel_for(classes, [&](std::size_t c) {
    if (stats.count(c) == 0) return;
    moment[c] = stats.finalize(c);
    denom[c] = regularize(moment[c], hyper.gamma, c).matrix;
  });

  std::vector<std::vector<Detector>> found(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t t) {
    const auto [i, j] = pairs[t];
    EigenPairSet eigs;
    try {
      eigs = solve_pair(moment[i], denom[j], i, j);
    } catch (const CholeskyError&) {
      throw CholeskyError("second moment of class " + std::to_string(j + 1) +
                          " is singular; increase gamma (currently " + std::to_string(hyper.gamma) + ")");
    }
    const SignReference ref{X, rows[i]};
    found[t] = select_detectors(eigs, hyper.theta, hyper.m_max, &ref);
  });

  std::vector<Detector> bank;
  for (auto& f : found) {
    for (auto& det : f) bank.push_back(std::move(det));
  }
  if (bank.empty()) {
    std::ostringstream msg;
    msg << "no generalized eigenvalue reached theta = " << hyper.theta << "; lower theta";
    throw EmptyBankError(msg.str());
  }

  layer.layout = FeatureLayout(std::move(bank), static_cast<std::size_t>(X.cols()), passthrough);
  RowMatrix out = layer.layout.expand(X);
  if (standardize) {
    layer.standardizer = Standardizer::fit(out);
    layer.standardizer.apply(out);
  }
  if (features) *features = std::move(out);
  return layer;
}

const RowMatrix& dense_features(const LabeledDataset& data, LabeledDataset& scratch) {
  if (!data.is_sparse()) return data.matrix();
  scratch.features = data.features;
  scratch.make_dense();
  return scratch.matrix();
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::gem:
      return "gem";
    case Method::gem_rff:
      return "gem+rff";
    case Method::rff:
      return "rff";
    case Method::linear:
      return "linear";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "gem") return Method::gem;
  if (text == "gem+rff" || text == "gem_rff" || text == "gem-rff") return Method::gem_rff;
  if (text == "rff") return Method::rff;
  if (text == "linear") return Method::linear;
  throw ConfigError("unknown method '" + std::string(text) + "' (expected gem, gem+rff, rff or linear)");
}

void PipelineSpec::validate() const {
  const bool uses_gem = method == Method::gem || method == Method::gem_rff;
  const bool uses_rff = method == Method::gem_rff || method == Method::rff;
  if (uses_gem) {
    if (layers.empty()) throw ConfigError("at least one GEM layer is required");
    if (layers.size() > max_layers) {
      throw ConfigError(std::to_string(layers.size()) + " GEM layers requested but max_layers is " +
                        std::to_string(max_layers));
    }
    for (const auto& h : layers) {
      if (!(h.gamma >= 0.0) || !std::isfinite(h.gamma)) throw ConfigError("gamma must be a nonnegative number");
      if (!(h.theta >= 0.0) || !std::isfinite(h.theta)) throw ConfigError("theta must be a nonnegative number");
      if (h.m_max < 1) throw ConfigError("m_max must be at least 1");
    }
  }
  if (uses_rff) {
    if (rff.features < 1) throw ConfigError("rff_features must be positive");
    if (!(rff.sigma > 0.0) || !std::isfinite(rff.sigma)) throw ConfigError("rff_sigma must be positive");
  }
  if (!(train.l2 >= 0.0) || !std::isfinite(train.l2)) throw ConfigError("l2 must be nonnegative");
  if (!(train.grad_tol >= 0.0)) throw ConfigError("grad_tol must be nonnegative");
  if (train.history < 1) throw ConfigError("history must be at least 1");
}

GemLayer fit_layer(const RowMatrix& X, std::span<const std::uint32_t> labels, std::size_t classes,
                   const GemHyper& hyper, bool standardize, bool passthrough) {
  return fit_layer_impl(X, labels, classes, hyper, standardize, passthrough, nullptr);
}

GemModel fit(const LabeledDataset& data, const PipelineSpec& spec) {
  spec.validate();
  if (data.size() == 0) throw ConfigError("training set is empty");
  const std::size_t k = data.classes();
  if (k < 1) throw ConfigError("training set has no classes");

  LabeledDataset scratch;
  const RowMatrix& raw = dense_features(data, scratch);

  GemModel model;
  model.label_names = data.label_names;
  model.append_bias = spec.append_bias;
  model.input_dim = static_cast<std::size_t>(raw.cols());
  model.image_rows = data.image_rows;
  model.image_cols = data.image_cols;

  RowMatrix cur;
  if (spec.append_bias) {
    cur.resize(raw.rows(), raw.cols() + 1);
    cur.leftCols(raw.cols()) = raw;
    cur.col(raw.cols()).setOnes();
  } else {
    cur = raw;
  }

  if (spec.method == Method::rff || spec.method == Method::gem_rff) {
    RffStage stage{RffMap(static_cast<std::size_t>(cur.cols()), spec.rff.features, spec.rff.sigma, spec.rff.seed)};
    cur = stage.map.apply(cur);
    model.stages.emplace_back(std::move(stage));
  }
  if (spec.method == Method::gem || spec.method == Method::gem_rff) {
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
      RowMatrix next;
      GemLayer layer = fit_layer_impl(cur, data.labels, k, spec.layers[l], spec.standardize, spec.passthrough, &next);
      log::info("layer " + std::to_string(l + 1) + ": " + std::to_string(layer.layout.detector_count()) +
                " detectors from " + std::to_string(layer.plan.size()) + " pairs");
      cur = std::move(next);
      model.stages.emplace_back(std::move(layer));
    }
  }

  model.classifier = train(cur, data.labels, k, spec.train);
  model.train_metrics = evaluate(model.predict_proba(raw), data.labels);
  return model;
}

GemModel fit_gem(const LabeledDataset& data, const GemHyper& hyper, double l2) {
  PipelineSpec spec;
  spec.layers = {hyper};
  spec.train.l2 = l2;
  return fit(data, spec);
}

GemModel fit_deep_gem(const LabeledDataset& data, const GemHyper& layer1, const GemHyper& layer2, double l2) {
  PipelineSpec spec;
  spec.layers = {layer1, layer2};
  spec.train.l2 = l2;
  return fit(data, spec);
}

GemModel fit_gem_rff(const LabeledDataset& data, const RffSpec& rff, const GemHyper& hyper, double l2) {
  PipelineSpec spec;
  spec.method = Method::gem_rff;
  spec.rff = rff;
  spec.layers = {hyper};
  spec.train.l2 = l2;
  return fit(data, spec);
}

std::vector<GemModel> fit_ensemble(const LabeledDataset& data, const PipelineSpec& spec, std::size_t n_members,
                                   std::uint64_t base_seed) {
  if (n_members < 1) throw ConfigError("ensemble size must be at least 1");
  if (spec.method != Method::gem && spec.method != Method::gem_rff) {
    throw ConfigError("ensembles need a GEM method so members can differ in their pair plans");
  }
  for (const auto& h : spec.layers) {
    if (!randomized(h.pairs.strategy)) {
      throw ConfigError("ensembles need a randomized pair strategy (hypercube, random or stratified), got " +
                        std::string(to_string(h.pairs.strategy)));
    }
  }
  std::vector<GemModel> members(n_members);
  parallel_for(n_members, [&](std::size_t m) {
    PipelineSpec member = spec;
    for (auto& h : member.layers) h.pairs.seed = base_seed + m;
    members[m] = fit(data, member);
  });
  return members;
}

RowMatrix predict_proba(std::span<const GemModel> members, const RowMatrix& X) {
  if (members.empty()) throw ConfigError("ensemble needs at least one member");
  std::vector<RowMatrix> probs(members.size());
  for (std::size_t m = 0; m < members.size(); ++m) {
    if (members[m].label_names != members.front().label_names) {
      throw LabelError("ensemble members were trained on different label maps");
    }
    probs[m] = members[m].predict_proba(X);
  }
  if (members.size() == 1) return probs.front();
  return ensemble_geomean(probs);
}

SearchResult grid_search(const LabeledDataset& train, const LabeledDataset& validation,
                         std::span<const PipelineSpec> candidates) {
  if (candidates.empty()) throw ConfigError("search grid is empty");
  if (train.label_names != validation.label_names) throw LabelError("train and validation label maps differ");
  for (const auto& c : candidates) c.validate();

  LabeledDataset scratch;
  const RowMatrix& X = dense_features(validation, scratch);
  SearchResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < candidates.size(); ++t) {
    SearchTrial trial{candidates[t], {}};
    try {
      const GemModel model = fit(train, candidates[t]);
      trial.validation = evaluate(model.predict_proba(X), validation.labels);
    } catch (const EmptyBankError& e) {
      log::warning(std::string("candidate ") + std::to_string(t + 1) + " skipped: " + e.what());
      trial.validation.n = validation.size();
      trial.validation.error_rate = 1.0;
      trial.validation.cross_entropy = std::numeric_limits<double>::infinity();
    } catch (const CholeskyError& e) {
      log::warning(std::string("candidate ") + std::to_string(t + 1) + " skipped: " + e.what());
      trial.validation.n = validation.size();
      trial.validation.error_rate = 1.0;
      trial.validation.cross_entropy = std::numeric_limits<double>::infinity();
    }
    if (trial.validation.cross_entropy < best) {
      best = trial.validation.cross_entropy;
      result.best = t;
    }
    result.trials.push_back(std::move(trial));
  }
  if (!std::isfinite(best)) throw EmptyBankError("every search candidate failed to produce a detector bank");
  return result;
}

}  // namespace gem
