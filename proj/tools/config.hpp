#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gem/pipeline.hpp"

namespace gem::cli {

/// Flat key = value settings. Every known key always has a value; unknown
/// keys are rejected when set.
class RunConfig {
 public:
  RunConfig();

  /// '#' starts a comment; blank lines are ignored.
  void load_file(const std::filesystem::path& path);
  void load(std::istream& in, const std::string& origin);
  /// "key=value"
  void assign(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Comma-separated values of a searchable key.
  std::vector<std::string> get_list(const std::string& key) const;
  bool is_list(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Every key, sorted, one "key = value" line each.
  void write(std::ostream& out) const;

 private:
  std::map<std::string, std::string> values_;
};

bool is_searchable(const std::string& key);

/// Model settings from a config without list values. `classes` is needed to
/// read an explicit pair plan.
PipelineSpec pipeline_spec(const RunConfig& config, std::size_t classes);

/// One config per point of the grid spanned by the list-valued searchable
/// keys, in row-major order of the sorted key names.
std::vector<RunConfig> expand_grid(const RunConfig& config);

}  // namespace gem::cli
