#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "config.hpp"
#include "gem/error.hpp"
#include "gem/ingest.hpp"
#include "gem/log.hpp"
#include "gem/model.hpp"
#include "gem/parallel.hpp"
#include "gem/pipeline.hpp"
#include "gem/png.hpp"

namespace gem::cli {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

/// Files are staged in memory and written together once every computation
/// has succeeded, so a failed run leaves nothing behind.
class OutputSet {
 public:
  void add(fs::path path, std::string content) { files_.emplace_back(std::move(path), std::move(content)); }

  void commit() const {
    std::vector<fs::path> written;
    try {
      for (const auto& [path, content] : files_) {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        fs::path tmp = path;
        tmp += ".partial";
        {
          std::ofstream out(tmp, std::ios::binary);
          if (!out) throw IoError("cannot write " + path.string());
          out.write(content.data(), static_cast<std::streamsize>(content.size()));
          if (!out) throw IoError("write failed for " + path.string());
        }
        fs::rename(tmp, path);
        written.push_back(path);
      }
    } catch (const fs::filesystem_error& e) {
      for (const auto& p : written) fs::remove(p);
      throw IoError(e.what());
    } catch (...) {
      for (const auto& p : written) fs::remove(p);
      throw;
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

std::string bytes_to_string(const std::vector<std::uint8_t>& bytes) { return std::string(bytes.begin(), bytes.end()); }

std::string fixed(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

LabeledDataset load_from(const RunConfig& config, const std::string& prefix) {
  const std::string& path = config.get(prefix + "_data");
  std::string format = config.get(prefix + "_format");
  if (format.empty()) format = config.get("train_format");
  return load(path, parse_data_format(format), config.get(prefix + "_labels"));
}

/// Dense copy conformed to `width` columns. Sparse data narrower than the
/// model (trailing all-zero features absent from a libsvm file) is padded.
RowMatrix dense_input(const LabeledDataset& data, std::size_t width) {
  RowMatrix X;
  if (data.is_sparse()) {
    X = RowMatrix(std::get<SparseRowMatrix>(data.features));
    if (static_cast<std::size_t>(X.cols()) < width) {
      const Eigen::Index old = X.cols();
      X.conservativeResize(Eigen::NoChange, static_cast<Eigen::Index>(width));
      X.rightCols(static_cast<Eigen::Index>(width) - old).setZero();
    }
  } else {
    X = data.matrix();
  }
  if (static_cast<std::size_t>(X.cols()) != width) {
    throw DimensionError("data has " + std::to_string(X.cols()) + " features but the model expects " +
                         std::to_string(width));
  }
  return X;
}

LabeledDataset conform(LabeledDataset data, std::size_t width) {
  if (data.dim() != width) data.features = dense_input(data, width);
  return data;
}

json metrics_json(const Metrics& m) {
  return json{{"n", m.n}, {"errors", m.errors}, {"error_rate", m.error_rate}, {"cross_entropy", m.cross_entropy}};
}

void report_metrics(std::ostream& out, const std::string& prefix, const Metrics& m) {
  out << prefix << "_n " << m.n << '\n';
  out << prefix << "_errors " << m.errors << '\n';
  out << prefix << "_error " << fixed(m.error_rate, 6) << '\n';
  out << prefix << "_cross_entropy " << fixed(m.cross_entropy, 4) << '\n';
}

json model_json(const GemModel& model) {
  json stages = json::array();
  for (const auto& stage : model.stages) {
    if (const auto* rff = std::get_if<RffStage>(&stage)) {
      stages.push_back({{"type", "rff"},
                        {"input_dim", rff->input_dim()},
                        {"features", rff->output_dim()},
                        {"sigma", rff->map.sigma()},
                        {"seed", rff->map.seed()}});
    } else {
      const auto& g = std::get<GemLayer>(stage);
      stages.push_back({{"type", "gem"},
                        {"input_dim", g.input_dim()},
                        {"output_dim", g.output_dim()},
                        {"pairs", g.plan.size()},
                        {"pair_strategy", std::string(to_string(g.plan.strategy))},
                        {"pair_seed", g.plan.seed},
                        {"detectors", g.layout.detector_count()},
                        {"gamma", g.hyper.gamma},
                        {"theta", g.hyper.theta},
                        {"m_max", g.hyper.m_max}});
    }
  }
  return json{{"classes", model.classes()},
              {"input_dim", model.input_dim},
              {"stages", stages},
              {"classifier_iterations", model.classifier.iterations},
              {"classifier_objective", model.classifier.objective},
              {"train", metrics_json(model.train_metrics)}};
}

void describe_model(std::ostream& out, const GemModel& model) {
  std::size_t l = 0;
  for (const auto& stage : model.stages) {
    if (const auto* rff = std::get_if<RffStage>(&stage)) {
      out << "stage rff " << rff->input_dim() << " -> " << rff->output_dim() << " sigma " << rff->map.sigma() << '\n';
    } else {
      const auto& g = std::get<GemLayer>(stage);
      out << "stage gem" << ++l << ' ' << g.input_dim() << " -> " << g.output_dim() << " pairs " << g.plan.size()
          << " detectors " << g.layout.detector_count() << '\n';
    }
  }
}

void configure_runtime(const RunConfig& config) {
  set_num_threads(config.get_u64("threads"));
}

/// Train/test (and optionally validation) sets as described by the config.
struct DataSplits {
  LabeledDataset train;
  std::optional<LabeledDataset> validation;
  std::optional<LabeledDataset> test;
};

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::stringstream s(text);
  std::string part;
  while (std::getline(s, part, ',')) {
    RunConfig scratch;
    scratch.set("validation_split", part);
    out.push_back(scratch.get_double("validation_split"));
  }
  return out;
}

DataSplits load_splits(const RunConfig& config, bool want_validation) {
  if (config.get("train_data").empty()) throw ConfigError("train_data is not set");
  DataSplits s;
  LabeledDataset all = load_from(config, "train");
  const std::uint64_t seed = config.get_u64("split_seed");
  const std::string& split_text = config.get("split");
  if (!split_text.empty()) {
    const auto fractions = parse_fractions(split_text);
    auto parts = split(all, fractions, seed);
    if (parts.size() == 2) {
      s.train = std::move(parts[0]);
      s.test = std::move(parts[1]);
    } else if (parts.size() == 3) {
      s.train = std::move(parts[0]);
      s.validation = std::move(parts[1]);
      s.test = std::move(parts[2]);
    } else {
      throw ConfigError("split needs two (train,test) or three (train,validation,test) fractions");
    }
  } else {
    s.train = std::move(all);
  }
  if (!config.get("test_data").empty()) {
    if (s.test) throw ConfigError("set either split or test_data, not both");
    LabeledDataset test = load_from(config, "test");
    remap_labels(test, s.train.label_names);
    s.test = conform(std::move(test), s.train.dim());
  }
  if (!config.get("validation_data").empty()) {
    if (s.validation) throw ConfigError("validation_data conflicts with a three-way split");
    LabeledDataset val = load_from(config, "validation");
    remap_labels(val, s.train.label_names);
    s.validation = conform(std::move(val), s.train.dim());
  }
  if (want_validation && !s.validation) {
    const double v = config.get_double("validation_split");
    if (!(v > 0.0 && v < 1.0)) throw ConfigError("validation_split must lie strictly between 0 and 1");
    const double fr[] = {1.0 - v, v};
    auto parts = split(s.train, fr, seed + 1);
    s.train = std::move(parts[0]);
    s.validation = std::move(parts[1]);
    s.validation->tag = "validation";
  }
  const std::size_t rows = config.get_u64("image_rows");
  const std::size_t cols = config.get_u64("image_cols");
  if (rows > 0 || cols > 0) {
    s.train.image_rows = rows;
    s.train.image_cols = cols;
  }
  return s;
}

std::string model_name(std::size_t member, std::size_t members) {
  return members == 1 ? "model.gem" : "model_" + std::to_string(member + 1) + ".gem";
}

/// Fits, evaluates and stages the standard outputs of a training run.
json train_and_stage(const RunConfig& config, const LabeledDataset& train, const std::optional<LabeledDataset>& test,
                     const fs::path& dir, OutputSet& outputs, std::ostream& report) {
  const PipelineSpec spec = pipeline_spec(config, train.classes());
  const std::size_t members = config.get_u64("ensemble");
  if (members < 1) throw ConfigError("ensemble must be at least 1");

  std::vector<GemModel> models;
  if (members == 1) {
    models.push_back(fit(train, spec));
  } else {
    models = fit_ensemble(train, spec, members, config.get_u64("pair_seed"));
  }

  json summary;
  summary["method"] = std::string(to_string(spec.method));
  summary["classes"] = train.classes();
  summary["labels"] = train.label_names;
  json files = json::array();
  json model_list = json::array();
  report << "method " << to_string(spec.method) << '\n';
  report << "members " << members << '\n';
  for (std::size_t m = 0; m < models.size(); ++m) {
    const std::string name = model_name(m, members);
    outputs.add(dir / name, bytes_to_string(serialize(models[m])));
    files.push_back(name);
    json mj = model_json(models[m]);
    mj["file"] = name;
    model_list.push_back(mj);
    describe_model(report, models[m]);
    report_metrics(report, members == 1 ? "train" : "member" + std::to_string(m + 1) + "_train", models[m].train_metrics);
  }
  summary["models"] = model_list;
  if (members > 1) {
    const Metrics ens = evaluate(predict_proba(models, dense_input(train, models.front().input_dim)), train.labels);
    report_metrics(report, "ensemble_train", ens);
    summary["ensemble_train"] = metrics_json(ens);
  }
  if (test) {
    const RowMatrix X = dense_input(*test, models.front().input_dim);
    if (members > 1) {
      json member_tests = json::array();
      for (std::size_t m = 0; m < models.size(); ++m) {
        const Metrics mt = evaluate(models[m].predict_proba(X), test->labels);
        report_metrics(report, "member" + std::to_string(m + 1) + "_test", mt);
        member_tests.push_back(metrics_json(mt));
      }
      summary["member_test"] = member_tests;
    }
    const Metrics t = evaluate(predict_proba(models, X), test->labels);
    report_metrics(report, "test", t);
    summary["test"] = metrics_json(t);
  }
  summary["files"] = files;
  return summary;
}

int cmd_train(const RunConfig& config, std::ostream& out) {
  configure_runtime(config);
  const fs::path dir = config.get("output_dir");
  const DataSplits data = load_splits(config, false);

  OutputSet outputs;
  std::ostringstream report;
  json summary = train_and_stage(config, data.train, data.test, dir, outputs, report);
  summary["command"] = "train";

  std::ostringstream resolved;
  config.write(resolved);
  outputs.add(dir / "report.txt", report.str());
  outputs.add(dir / "summary.json", summary.dump(2) + "\n");
  outputs.add(dir / "config.resolved", resolved.str());
  outputs.commit();
  out << report.str();
  return kOk;
}

std::string describe_point(const RunConfig& c, const RunConfig& base) {
  std::string s;
  for (const auto& [key, value] : base.values()) {
    if (!base.is_list(key)) continue;
    if (!s.empty()) s += ' ';
    s += key + "=" + c.get(key);
  }
  return s.empty() ? "(single point)" : s;
}

int cmd_search(const RunConfig& config, std::ostream& out) {
  configure_runtime(config);
  const fs::path dir = config.get("output_dir");
  const auto grid = expand_grid(config);
  DataSplits data = load_splits(config, true);

  std::vector<PipelineSpec> specs;
  for (const auto& point : grid) specs.push_back(pipeline_spec(point, data.train.classes()));
  const SearchResult result = grid_search(data.train, *data.validation, specs);

  std::ostringstream report;
  json trials = json::array();
  report << "# trial validation_error validation_cross_entropy settings\n";
  for (std::size_t t = 0; t < result.trials.size(); ++t) {
    const auto& m = result.trials[t].validation;
    report << "trial " << t + 1 << ' ' << fixed(m.error_rate, 6) << ' ' << fixed(m.cross_entropy, 4) << ' '
           << describe_point(grid[t], config) << '\n';
    json tj = {{"settings", describe_point(grid[t], config)},
               {"validation_error", m.error_rate},
               {"validation_cross_entropy", std::isfinite(m.cross_entropy) ? json(m.cross_entropy) : json(nullptr)}};
    trials.push_back(tj);
  }
  const RunConfig& best = grid[result.best];
  report << "best " << result.best + 1 << ' ' << describe_point(best, config) << '\n';

  LabeledDataset final_train = data.train;
  if (best.get_bool("retrain")) final_train = concat(data.train, *data.validation);
  OutputSet outputs;
  json summary = train_and_stage(best, final_train, data.test, dir, outputs, report);
  summary["command"] = "search";
  summary["trials"] = trials;
  summary["best_trial"] = result.best + 1;
  summary["retrained_on_validation"] = best.get_bool("retrain");

  std::ostringstream resolved;
  best.write(resolved);
  outputs.add(dir / "report.txt", report.str());
  outputs.add(dir / "summary.json", summary.dump(2) + "\n");
  outputs.add(dir / "config.resolved", resolved.str());
  outputs.commit();
  out << report.str();
  return kOk;
}

std::vector<GemModel> load_models(const std::vector<std::string>& paths) {
  if (paths.empty()) throw ConfigError("no model given");
  std::vector<GemModel> models;
  for (const auto& p : paths) {
    if (!fs::exists(p)) throw IoError("model file not found: " + p);
    models.push_back(load_model(p));
  }
  for (const auto& m : models) {
    if (m.label_names != models.front().label_names || m.input_dim != models.front().input_dim) {
      throw ConfigError("models disagree on labels or input width");
    }
  }
  return models;
}

struct DataArgs {
  std::string path;
  std::string format = "csv";
  std::string labels;
};

int cmd_predict(const std::vector<std::string>& model_paths, const DataArgs& data_args, const std::string& out_path,
                std::ostream& out) {
  const auto models = load_models(model_paths);
  if (out_path.empty()) throw ConfigError("--out is required");
  const LabeledDataset data = load(data_args.path, parse_data_format(data_args.format), data_args.labels);
  const RowMatrix P = predict_proba(models, dense_input(data, models.front().input_dim));

  std::ostringstream csv;
  const auto& names = models.front().label_names;
  csv << "predicted";
  for (const auto& name : names) csv << ",p_" << name;
  csv << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    Eigen::Index best = 0;
    P.row(i).maxCoeff(&best);
    csv << names[static_cast<std::size_t>(best)];
    for (Eigen::Index c = 0; c < P.cols(); ++c) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), P(i, c));
      csv << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    csv << '\n';
  }
  OutputSet outputs;
  outputs.add(out_path, csv.str());
  outputs.commit();
  out << "predicted " << P.rows() << " examples with " << models.size() << " model(s)\n";
  return kOk;
}

int cmd_eval(const std::vector<std::string>& model_paths, const DataArgs& data_args, const std::string& summary_path,
             std::ostream& out) {
  const auto models = load_models(model_paths);
  LabeledDataset data = load(data_args.path, parse_data_format(data_args.format), data_args.labels);
  remap_labels(data, models.front().label_names);
  const Metrics m = evaluate(predict_proba(models, dense_input(data, models.front().input_dim)), data.labels);

  std::ostringstream report;
  report << "models " << models.size() << '\n';
  report_metrics(report, "eval", m);
  if (!summary_path.empty()) {
    json summary = {{"command", "eval"}, {"models", model_paths}, {"eval", metrics_json(m)}};
    OutputSet outputs;
    outputs.add(summary_path, summary.dump(2) + "\n");
    outputs.commit();
  }
  out << report.str();
  return kOk;
}

int cmd_export(const std::string& model_path, const fs::path& dir, std::size_t rows, std::size_t cols,
               std::size_t zoom, bool layout_dump, std::ostream& out, std::ostream& err) {
  const auto models = load_models({model_path});
  const GemModel& model = models.front();
  if (model.stages.empty() || !std::holds_alternative<GemLayer>(model.stages.front())) {
    throw ConfigError("the first stage of this model is not a GEM layer on the raw input");
  }
  const auto& layer = std::get<GemLayer>(model.stages.front());
  const std::size_t d = model.input_dim;
  if (rows == 0 && cols == 0) {
    rows = model.image_rows;
    cols = model.image_cols;
  }

  OutputSet outputs;
  std::ostringstream dump;
  write_detectors(dump, layer.layout, model.label_names);
  outputs.add(dir / "detectors.txt", dump.str());
  if (layout_dump) {
    std::ostringstream text;
    layer.layout.describe(text);
    outputs.add(dir / "layout.txt", text.str());
  }

  const auto& dets = layer.layout.detectors();
  std::size_t images = 0;
  if (rows * cols == d && d > 0) {
    for (std::size_t t = 0; t < dets.size(); ++t) {
      const std::span<const double> v(dets[t].v.data(), d);  // a trailing bias weight is not drawn
      char name[64];
      std::snprintf(name, sizeof(name), "detector_%03zu_%zu_%zu_r%zu.png", t + 1, dets[t].numerator + 1,
                    dets[t].denominator + 1, dets[t].rank);
      outputs.add(dir / name, bytes_to_string(encode_png_rgb(diverging_rgb(v, rows, cols, zoom), cols * zoom, rows * zoom)));
      ++images;
    }
    // Grid of every detector, one tile each, separated by a white border.
    const std::size_t per_row = std::min<std::size_t>(dets.size(), 10);
    const std::size_t grid_rows = (dets.size() + per_row - 1) / per_row;
    const std::size_t tw = cols * zoom, th = rows * zoom, gap = 1;
    const std::size_t W = per_row * (tw + gap) + gap, H = grid_rows * (th + gap) + gap;
    std::vector<std::uint8_t> canvas(3 * W * H, 255);
    for (std::size_t t = 0; t < dets.size(); ++t) {
      const auto tile = diverging_rgb(std::span<const double>(dets[t].v.data(), d), rows, cols, zoom);
      const std::size_t ox = gap + (t % per_row) * (tw + gap), oy = gap + (t / per_row) * (th + gap);
      for (std::size_t y = 0; y < th; ++y) {
        std::copy_n(&tile[3 * y * tw], 3 * tw, &canvas[3 * ((oy + y) * W + ox)]);
      }
    }
    outputs.add(dir / "grid.png", bytes_to_string(encode_png_rgb(canvas, W, H)));
  } else {
    err << "warning: input width " << d << " has no declared image shape (rows x cols); writing the text dump only\n";
  }
  outputs.commit();
  out << "exported " << dets.size() << " detectors, " << images << " images\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized eigenvector features for multiclass classification"};
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Progress messages");
  app.add_flag("-q,--quiet", quiet, "Errors only");

  std::string config_path;
  std::vector<std::string> overrides;
  std::string threads;

  std::string output_dir;
  auto* train_cmd = app.add_subcommand("train", "Fit a model and write it with a report");
  auto* search_cmd = app.add_subcommand("search", "Grid search over list-valued keys, then fit the best point");
  for (auto* cmd : {train_cmd, search_cmd}) {
    cmd->add_option("-c,--config", config_path, "key = value config file");
    cmd->add_option("-s,--set", overrides, "Override one key (key=value)");
    cmd->add_option("-o,--output-dir", output_dir, "Output directory (overrides output_dir)");
    cmd->add_option("-j,--threads", threads, "Worker threads (overrides threads)");
  }

  std::vector<std::string> model_paths;
  DataArgs data_args;
  std::string out_path, summary_path;
  auto* predict_cmd = app.add_subcommand("predict", "Write class probabilities for a dataset");
  auto* eval_cmd = app.add_subcommand("eval", "Error rate and cross-entropy; several models are ensembled");
  for (auto* cmd : {predict_cmd, eval_cmd}) {
    cmd->add_option("-m,--model", model_paths, "Model file (repeat for a geometric-mean ensemble)")->required();
    cmd->add_option("-d,--data", data_args.path, "Dataset")->required();
    cmd->add_option("-f,--format", data_args.format, "csv, libsvm or idx");
    cmd->add_option("-l,--labels", data_args.labels, "Label file (idx only)");
    cmd->add_option("-j,--threads", threads, "Worker threads");
  }
  predict_cmd->add_option("--out", out_path, "Probability CSV to write")->required();
  eval_cmd->add_option("--summary", summary_path, "JSON summary to write");

  std::string export_model, export_dir;
  std::size_t rows = 0, cols = 0, zoom = 4;
  bool layout_dump = false;
  auto* export_cmd = app.add_subcommand("export-detectors", "Detector images and text dump of the first GEM layer");
  export_cmd->add_option("-m,--model", export_model, "Model file")->required();
  export_cmd->add_option("--out", export_dir, "Output directory")->required();
  export_cmd->add_option("--rows", rows, "Image height (defaults to the shape stored in the model)");
  export_cmd->add_option("--cols", cols, "Image width");
  export_cmd->add_option("--zoom", zoom, "Pixels per input feature")->check(CLI::Range(1, 64));
  export_cmd->add_flag("--layout", layout_dump, "Also dump the feature layout");

  std::vector<const char*> argv{"gem"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigFailure;
  }

  log::set_level(quiet ? log::Level::quiet : verbose ? log::Level::info : log::Level::warning);
  try {
    if (!threads.empty()) {
      RunConfig scratch;
      scratch.set("threads", threads);
      set_num_threads(scratch.get_u64("threads"));
    }
    if (*train_cmd || *search_cmd) {
      RunConfig config;
      if (!config_path.empty()) config.load_file(config_path);
      for (const auto& o : overrides) config.assign(o);
      if (!output_dir.empty()) config.set("output_dir", output_dir);
      if (!threads.empty()) config.set("threads", threads);
      return *train_cmd ? cmd_train(config, out) : cmd_search(config, out);
    }
    if (*predict_cmd) return cmd_predict(model_paths, data_args, out_path, out);
    if (*eval_cmd) return cmd_eval(model_paths, data_args, summary_path, out);
    if (*export_cmd) return cmd_export(export_model, export_dir, rows, cols, zoom, layout_dump, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kComputeFailure;
  }
  return kConfigFailure;
}

}  // namespace gem::cli
