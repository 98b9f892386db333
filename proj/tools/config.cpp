#include "config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "gem/error.hpp"

namespace gem::cli {
namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> table = {
      {"train_data", ""},
      {"train_format", "csv"},
      {"train_labels", ""},
      {"test_data", ""},
      {"test_format", ""},
      {"test_labels", ""},
      {"validation_data", ""},
      {"validation_format", ""},
      {"validation_labels", ""},
      {"split", ""},
      {"validation_split", "0.2"},
      {"split_seed", "0"},
      {"method", "gem"},
      {"layers", "1"},
      {"max_layers", "2"},
      {"gamma", "0.1"},
      {"theta", "1.0"},
      {"m_max", "3"},
      {"gamma2", ""},
      {"theta2", ""},
      {"m_max2", ""},
      {"pairs", "all"},
      {"pair_seed", "0"},
      {"pair_count", "0"},
      {"pair_plan", ""},
      {"l2", "1e-4"},
      {"max_iter", "500"},
      {"grad_tol", "1e-6"},
      {"history", "10"},
      {"rff_features", "4096"},
      {"rff_sigma", "1.0"},
      {"rff_seed", "0"},
      {"standardize", "true"},
      {"passthrough", "false"},
      {"append_bias", "false"},
      {"ensemble", "1"},
      {"threads", "0"},
      {"output_dir", "gem-out"},
      {"image_rows", "0"},
      {"image_cols", "0"},
      {"retrain", "false"},
  };
  return table;
}

const std::set<std::string>& searchable() {
  static const std::set<std::string> keys = {"gamma",        "theta",     "m_max",    "gamma2", "theta2",
                                             "m_max2",       "l2",        "layers",   "pairs",  "pair_count",
                                             "rff_features", "rff_sigma", "rff_seed", "method"};
  return keys;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = text.find(',', pos);
    out.emplace_back(trim(std::string_view(text).substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

double parse_double(const std::string& key, std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(key + ": expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, std::string_view text) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + std::string(text) + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(key + ": expected true or false, got '" + std::string(text) + "'");
}

}  // namespace

RunConfig::RunConfig() : values_(defaults()) {}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  load(in, path.string());
}

void RunConfig::load(std::istream& in, const std::string& origin) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = line;
    if (auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const std::size_t eq = text.find('=');
    if (eq == std::string_view::npos) throw FormatError(origin + ": expected key = value", lineno);
    const std::string key(trim(text.substr(0, eq)));
    if (!values_.contains(key)) throw FormatError(origin + ": unknown key '" + key + "'", lineno);
    values_[key] = std::string(trim(text.substr(eq + 1)));
  }
}

void RunConfig::assign(std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!values_.contains(key)) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + key + "'");
  return it->second;
}

double RunConfig::get_double(const std::string& key) const { return parse_double(key, get(key)); }
std::uint64_t RunConfig::get_u64(const std::string& key) const { return parse_u64(key, get(key)); }
bool RunConfig::get_bool(const std::string& key) const { return parse_bool(key, get(key)); }

std::vector<std::string> RunConfig::get_list(const std::string& key) const { return split_commas(get(key)); }

bool RunConfig::is_list(const std::string& key) const {
  return is_searchable(key) && get(key).find(',') != std::string::npos;
}

void RunConfig::write(std::ostream& out) const {
  for (const auto& [key, value] : values_) out << key << " = " << value << '\n';
}

bool is_searchable(const std::string& key) { return searchable().contains(key); }

PipelineSpec pipeline_spec(const RunConfig& config, std::size_t classes) {
  for (const auto& key : searchable()) {
    if (config.is_list(key)) throw ConfigError(key + " has several values; use the search command");
  }
  PipelineSpec spec;
  spec.method = parse_method(config.get("method"));
  spec.max_layers = config.get_u64("max_layers");

  GemHyper base;
  base.gamma = config.get_double("gamma");
  base.theta = config.get_double("theta");
  base.m_max = config.get_u64("m_max");
  base.pairs.strategy = parse_pair_strategy(config.get("pairs"));
  base.pairs.seed = config.get_u64("pair_seed");
  base.pairs.count = config.get_u64("pair_count");
  const std::string& plan_path = config.get("pair_plan");
  if (!plan_path.empty()) {
    std::ifstream in(plan_path);
    if (!in) throw IoError("cannot open pair plan " + plan_path);
    base.pairs.strategy = PairStrategy::listed;
    base.pairs.listed = read_plan(in, classes).pairs;
  } else if (base.pairs.strategy == PairStrategy::listed) {
    throw ConfigError("pairs = listed needs pair_plan");
  }

  const std::size_t layers = config.get_u64("layers");
  if (layers < 1) throw ConfigError("layers must be at least 1");
  spec.layers.assign(layers, base);
  if (layers >= 2) {
    GemHyper& second = spec.layers[1];
    if (!config.get("gamma2").empty()) second.gamma = config.get_double("gamma2");
    if (!config.get("theta2").empty()) second.theta = config.get_double("theta2");
    if (!config.get("m_max2").empty()) second.m_max = config.get_u64("m_max2");
  }

  spec.rff.features = config.get_u64("rff_features");
  spec.rff.sigma = config.get_double("rff_sigma");
  spec.rff.seed = config.get_u64("rff_seed");
  spec.train.l2 = config.get_double("l2");
  spec.train.max_iter = config.get_u64("max_iter");
  spec.train.grad_tol = config.get_double("grad_tol");
  spec.train.history = config.get_u64("history");
  spec.standardize = config.get_bool("standardize");
  spec.passthrough = config.get_bool("passthrough");
  spec.append_bias = config.get_bool("append_bias");
  spec.validate();
  return spec;
}

std::vector<RunConfig> expand_grid(const RunConfig& config) {
  std::vector<RunConfig> grid{config};
  for (const auto& key : searchable()) {
    if (!config.is_list(key)) continue;
    const auto options = config.get_list(key);
    std::vector<RunConfig> next;
    for (const auto& g : grid) {
      for (const auto& v : options) {
        if (v.empty()) throw ConfigError(key + ": empty entry in value list");
        RunConfig c = g;
        c.set(key, v);
        next.push_back(std::move(c));
      }
    }
    grid = std::move(next);
  }
  return grid;
}

}  // namespace gem::cli
