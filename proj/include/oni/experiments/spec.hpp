#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace oni::experiments {

using Params = std::map<std::string, std::string>;

/// One resolved experiment invocation.
struct ExperimentSpec {
  std::string name;
  Params params;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;

  std::string get(const std::string& key) const;
  long long get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  /// Comma-separated list; empty items are dropped.
  std::vector<std::string> get_list(const std::string& key) const;
};

std::vector<std::string> experiment_names();

/// Every accepted key with its default value; throws BadSpec for unknown
/// experiment names.
const Params& default_params(const std::string& name);

/// Flat key=value lines; '#' starts a comment; blank lines ignored.
Params parse_config_text(const std::string& text);
Params read_config_file(const std::filesystem::path& path);

/// `<name> [--key value]... [--config path] [--out dir] [--seed N]`.
/// Command-line keys override config-file keys override defaults; unknown
/// keys are rejected with BadSpec.
ExperimentSpec parse_command_line(const std::vector<std::string>& args);

/// Flat key=value echo of the resolved spec, one key per line, sorted.
std::string manifest_text(const ExperimentSpec& spec);

}  // namespace oni::experiments
