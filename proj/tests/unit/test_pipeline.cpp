#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gem/error.hpp"
#include "gem/log.hpp"
#include "gem/moments.hpp"
#include "gem/pipeline.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace gem;

namespace {

std::size_t argmax_row(const RowMatrix& P, Eigen::Index i) {
  Eigen::Index a = 0;
  P.row(i).maxCoeff(&a);
  return static_cast<std::size_t>(a);
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("axis task: detectors align with the axes") {
    const auto all = test::axis_task(4000, 1);
    const auto [train, test] = test::head_tail(all, 2000);
    const GemModel m = fit_gem(train, GemHyper{});
    const auto& det = m.gem_layers()[0]->layout.detectors();
    REQUIRE(!det.empty());
    for (const auto& d : det) {
      if (d.rank != 0) continue;
      Vector axis = Vector::Zero(2);
      axis[d.numerator == 0 ? 0 : 1] = 1.0;
      CHECK(test::abs_cosine(d.v, axis) >= 0.99);
    }
    const Metrics te = evaluate(m.predict_proba(test.matrix()), test.labels);
    CHECK(te.error_rate <= 0.05);
  }

  TEST_CASE("identical classes: eigenvalues near one, high theta empties the bank") {
    Rng rng(4);
    const RowMatrix X = test::gaussian_matrix(5000, 2, rng);
    std::vector<std::uint32_t> y(5000);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<std::uint32_t>(i % 2);
    auto data = test::make_dataset(X, y, 2);
    GemHyper h;
    h.gamma = 0.0;  // the ridge sits on the denominator only and would pull lambda below 1
    h.theta = 0.0;
    h.m_max = 2;
    const GemLayer layer = fit_layer(X, y, 2, h);
    for (const auto& d : layer.layout.detectors()) CHECK(std::abs(d.lambda - 1.0) <= 0.1);
    h.theta = 1.2;
    CHECK_THROWS_AS(fit_gem(data, h), EmptyBankError);
  }

  TEST_CASE("deep GEM widths and non-degradation") {
    const auto all = test::gaussian_task(12000, 3, 10, 2);
    const auto [train, test] = test::head_tail(all, 6000);
    const GemHyper h;
    const GemModel one = fit_gem(train, h);
    const GemModel two = fit_deep_gem(train, h, h);
    const auto layers = two.gem_layers();
    REQUIRE(layers.size() == 2);
    CHECK(layers[1]->input_dim() == 6 * layers[0]->layout.detector_count());
    const double e1 = evaluate(one.predict_proba(test.matrix()), test.labels).error_rate;
    const double e2 = evaluate(two.predict_proba(test.matrix()), test.labels).error_rate;
    MESSAGE("gem " << e1 << " deep " << e2);
    CHECK(e2 <= e1 + 0.01);
    PipelineSpec three;
    three.layers = {h, h, h};
    CHECK_THROWS_AS(three.validate(), ConfigError);
  }

  TEST_CASE("gem+rff chain widths") {
    const auto data = test::gaussian_task(400, 2, 3, 3);
    RffSpec r{128, 1.5, 7};
    GemHyper h;
    h.theta = 0.0;
    const GemModel m = fit_gem_rff(data, r, h);
    REQUIRE(m.stages.size() == 2);
    CHECK(stage_input_dim(m.stages[0]) == 3);
    CHECK(stage_output_dim(m.stages[0]) == 128);
    CHECK(stage_input_dim(m.stages[1]) == 128);
    CHECK(m.classifier.width() == 6 * m.gem_layers()[0]->layout.detector_count());
  }

  TEST_CASE("recorded training metrics are reproduced by inference") {
    const auto data = test::gaussian_task(800, 4, 4, 5);
    const GemModel m = fit_gem(data, GemHyper{});
    const Metrics again = evaluate(m.predict_proba(data.matrix()), data.labels);
    CHECK(again.errors == m.train_metrics.errors);
    CHECK(std::abs(again.error_rate - m.train_metrics.error_rate) <= 1e-12);
    CHECK(std::abs(again.cross_entropy - m.train_metrics.cross_entropy) <= 1e-12);
  }

  TEST_CASE("single-row inference matches batch") {
    const auto data = test::gaussian_task(300, 3, 4, 6);
    const GemModel m = fit_deep_gem(data, GemHyper{}, GemHyper{});
    const RowMatrix P = m.predict_proba(data.matrix());
    for (Eigen::Index i = 0; i < 20; ++i) {
      const Vector p = m.predict_proba(std::span<const double>(data.matrix().row(i).data(), 4));
      CHECK((p - P.row(i).transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  TEST_CASE("lightly regularized fit is nearly invariant") {
    const auto all = test::gaussian_task(12000, 3, 10, 8);
    const auto [train, test] = test::head_tail(all, 6000);
    Rng rng(9);
    const Matrix A = test::random_invertible(10, 10.0, rng);
    GemHyper h;
    h.gamma = 1e-4;
    const GemModel a = fit_gem(train, h);
    const GemModel b = fit_gem(test::transformed(train, A), h);
    const RowMatrix Pa = a.predict_proba(test.matrix());
    const RowMatrix Pb = b.predict_proba(test::transformed(test, A).matrix());
    std::size_t agree = 0;
    for (Eigen::Index i = 0; i < Pa.rows(); ++i) agree += argmax_row(Pa, i) == argmax_row(Pb, i);
    CHECK(double(agree) / double(Pa.rows()) >= 0.99);
  }

  TEST_CASE("classes without examples drop their pairs") {
    auto data = test::gaussian_task(300, 3, 3, 10);
    data.label_names.push_back("4");
    std::ostringstream sink;
    log::set_sink(&sink);
    const GemModel m = fit_gem(data, GemHyper{});
    log::set_sink(nullptr);
    for (const auto& d : m.gem_layers()[0]->layout.detectors()) {
      CHECK(d.numerator != 3);
      CHECK(d.denominator != 3);
    }
    CHECK(sink.str().find("no training examples") != std::string::npos);
    CHECK(m.classes() == 4);
  }

  TEST_CASE("ensembles") {
    const auto data = test::gaussian_task(800, 6, 4, 12);
    PipelineSpec spec;
    spec.layers[0].pairs.strategy = PairStrategy::hypercube;
    const auto same = fit_ensemble(data, spec, 1, 4);
    spec.layers[0].pairs.seed = 4;
    const GemModel single = fit(data, spec);
    CHECK(serialize(same[0]) == serialize(single));
    CHECK(predict_proba(same, data.matrix()) == single.predict_proba(data.matrix()));

    const auto members = fit_ensemble(data, spec, 3, 20);
    CHECK(members[0].gem_layers()[0]->plan != members[1].gem_layers()[0]->plan);
    CHECK(members[1].gem_layers()[0]->plan.seed == 21);

    PipelineSpec fixed;
    CHECK_THROWS_AS(fit_ensemble(data, fixed, 2, 0), ConfigError);
  }

  TEST_CASE("grid search picks the lowest validation cross-entropy") {
    const auto all = test::gaussian_task(1200, 3, 4, 13);
    const auto [train, val] = test::head_tail(all, 800);
    std::vector<PipelineSpec> grid(3);
    grid[0].layers[0].theta = 1e6;  // empty bank
    grid[1].train.l2 = 10.0;
    grid[2].train.l2 = 1e-4;
    const auto result = grid_search(train, val, grid);
    REQUIRE(result.trials.size() == 3);
    CHECK(std::isinf(result.trials[0].validation.cross_entropy));
    CHECK(result.best == 2);
    std::vector<PipelineSpec> hopeless(1);
    hopeless[0].layers[0].theta = 1e6;
    CHECK_THROWS(grid_search(train, val, hopeless));
  }

  TEST_CASE("top eigenvalue is stable under resampling") {
    const auto data = test::gaussian_task(10000, 3, 5, 14);
    const RowMatrix& X = data.matrix();
    Rng rng(15);
    std::vector<std::vector<double>> tops;  // per resample, per pair
    for (int b = 0; b < 10; ++b) {
      std::vector<std::size_t> rows(X.rows());
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(X.rows()));
      const auto boot = data.subset(rows);
      GemHyper h;
      h.theta = 0.0;
      h.m_max = 1;
      const GemLayer layer = fit_layer(boot.matrix(), boot.labels, 3, h);
      std::vector<double> t;
      for (const auto& d : layer.layout.detectors()) t.push_back(d.lambda);
      tops.push_back(t);
    }
    for (std::size_t p = 0; p < tops[0].size(); ++p) {
      double mean = 0.0, sq = 0.0;
      for (const auto& t : tops) mean += t[p];
      mean /= double(tops.size());
      for (const auto& t : tops) sq += (t[p] - mean) * (t[p] - mean);
      const double cv = std::sqrt(sq / double(tops.size() - 1)) / mean;
      CHECK(cv <= 0.05);
    }
  }

  TEST_CASE("method names") {
    CHECK(parse_method("gem+rff") == Method::gem_rff);
    CHECK(parse_method("linear") == Method::linear);
    CHECK(to_string(Method::rff) == "rff");
    CHECK_THROWS_AS(parse_method("svm"), ConfigError);
  }
}
