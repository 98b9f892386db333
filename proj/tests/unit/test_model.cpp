#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "gem/error.hpp"
#include "gem/model.hpp"
#include "gem/pipeline.hpp"
#include "support/synth.hpp"

using namespace gem;

namespace {

const GemModel& two_layer_rff_model() {
  static const GemModel model = [] {
    const auto data = test::gaussian_task(600, 3, 4, 11);
    PipelineSpec spec;
    spec.method = Method::gem_rff;
    spec.rff = {64, 2.0, 5};
    GemHyper h;
    h.theta = 0.0;
    h.pairs.strategy = PairStrategy::random;
    h.pairs.count = 4;
    h.pairs.seed = 3;
    spec.layers = {h, h};
    spec.append_bias = true;
    return fit(data, spec);
  }();
  return model;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("serialization is bit exact") {
    const GemModel& m = two_layer_rff_model();
    const auto bytes = serialize(m);
    const GemModel back = deserialize(bytes);
    CHECK(serialize(back) == bytes);
    CHECK(back.label_names == m.label_names);
    CHECK(back.append_bias);
    CHECK(back.stages.size() == 3);
    CHECK(back.classifier == m.classifier);
    CHECK(back.train_metrics.errors == m.train_metrics.errors);
    CHECK(back.train_metrics.cross_entropy == m.train_metrics.cross_entropy);

    const auto data = test::gaussian_task(50, 3, 4, 12);
    CHECK(back.predict_proba(data.matrix()) == m.predict_proba(data.matrix()));

    const auto path = std::filesystem::temp_directory_path() / "gem_model_test.gem";
    save_model(path, m);
    CHECK(serialize(load_model(path)) == bytes);
    std::filesystem::remove(path);
  }

  TEST_CASE("header and section layout") {
    const auto bytes = serialize(two_layer_rff_model());
    CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "GEMMODEL");
    CHECK(bytes[8] == GemModel::kVersion);
    CHECK(bytes[12] == 5);  // meta, rff, two gem layers, classifier
    CHECK(bytes[16] == 1);
  }

  TEST_CASE("corrupt input is rejected") {
    const auto good = serialize(two_layer_rff_model());
    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize(bad_magic), FormatError);
    auto bad_version = good;
    bad_version[8] = 99;
    CHECK_THROWS_AS(deserialize(bad_version), FormatError);
    for (std::size_t cut : {std::size_t{4}, std::size_t{20}, good.size() / 2, good.size() - 1}) {
      CHECK_THROWS_AS(deserialize(std::span(good.data(), cut)), FormatError);
    }
    auto trailing = good;
    trailing.push_back(0);
    CHECK_THROWS_AS(deserialize(trailing), FormatError);
    CHECK_THROWS_AS(load_model(std::filesystem::temp_directory_path() / "no_such_model.gem"), IoError);
  }

  TEST_CASE("width checks") {
    GemModel m = two_layer_rff_model();
    CHECK_NOTHROW(m.check_widths());
    m.input_dim += 1;
    CHECK_THROWS_AS(m.check_widths(), FormatError);
    GemModel n = two_layer_rff_model();
    n.stages.erase(n.stages.begin() + 1);
    CHECK_THROWS_AS(n.check_widths(), FormatError);
    const GemModel& ok = two_layer_rff_model();
    const double narrow[2] = {0, 0};
    CHECK_THROWS_AS(ok.predict_proba(narrow), DimensionError);
  }

  TEST_CASE("stage widths chain") {
    const GemModel& m = two_layer_rff_model();
    CHECK(stage_input_dim(m.stages[0]) == 5);
    CHECK(stage_output_dim(m.stages[0]) == 64);
    const auto layers = m.gem_layers();
    REQUIRE(layers.size() == 2);
    CHECK(layers[0]->input_dim() == 64);
    CHECK(layers[1]->input_dim() == 6 * layers[0]->layout.detector_count());
    CHECK(m.classifier.width() == layers[1]->output_dim());
  }

  TEST_CASE("detector dump round trips") {
    const GemModel& m = two_layer_rff_model();
    const auto& layout = m.gem_layers()[0]->layout;
    std::stringstream s;
    write_detectors(s, layout, m.label_names);
    CHECK(s.str().rfind("# labels", 0) == 0);
    const auto back = read_detectors(s);
    CHECK(back == layout.detectors());
    std::istringstream bad("# labels 1 2\n1 2 0 1.5 0.1\n1 x 0 1 1\n");
    CHECK_THROWS_AS(read_detectors(bad), FormatError);
  }
}
