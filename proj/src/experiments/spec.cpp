#include "oni/experiments/spec.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oni/errors.hpp"
#include "oni/random.hpp"

namespace oni::experiments {

namespace {

const std::map<std::string, Params>& all_defaults() {
  static const std::map<std::string, Params> table = {
      {"converge",
       {{"rows", "64"},
        {"cols", "256"},
        {"dist", "normal(3,1)"},
        {"T_max", "10"},
        {"seeds", "10"},
        {"variants", "plain,center,compact,accel"}}},
      {"table-a2",
       {{"rows", "64"}, {"cols", "32"}, {"seeds", "10"}, {"T", "30"}, {"groups", "full,32,16"}}},
      {"gradcheck",
       {{"shapes", "5x7,7x5"},
        {"T", "0,1,3,5,10"},
        {"flags", "plain,center,compact,accel"},
        {"h", "1e-5"},
        {"tol", "1e-5"}}},
      {"theorems",
       {{"n", "16"}, {"d", "16"}, {"samples", "100000"}, {"norm_tol", "1e-9"}, {"cov_tol", "0.05"}}},
      {"train-mlp",
       {{"data", "synth"},
        {"train_images", ""},
        {"train_labels", ""},
        {"test_images", ""},
        {"test_labels", ""},
        {"n_per_class", "800"},
        {"test_per_class", "200"},
        {"classes", "10"},
        {"dim", "64"},
        {"separation", "3"},
        {"method", "oni"},
        {"depth", "6"},
        {"width", "64"},
        {"scale", "1"},
        {"T", "5"},
        {"centering", "0"},
        {"compact", "1"},
        {"gains", "0"},
        {"lr", "0.1"},
        {"momentum", "0"},
        {"weight_decay", "0"},
        {"batch_size", "256"},
        {"epochs", "5"},
        {"track_steps", "0"}}},
      {"bench", {{"shapes", "256x2304,1024x1024"}, {"T", "1,3,5,7"}, {"repeats", "3"}}},
  };
  return table;
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::BadSpec, what); }

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_seed(const std::string& text) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    bad("seed must be a nonnegative integer, got '" + text + "'");
  }
  errno = 0;
  const auto value = std::strtoull(text.c_str(), nullptr, 10);
  if (errno == ERANGE) bad("seed out of range: " + text);
  return value;
}

}  // namespace

std::string ExperimentSpec::get(const std::string& key) const {
  const auto it = params.find(key);
  if (it == params.end()) bad("missing parameter '" + key + "'");
  return it->second;
}

long long ExperimentSpec::get_int(const std::string& key) const {
  const std::string text = get(key);
  char* end = nullptr;
  errno = 0;
  const long long value = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    bad("parameter '" + key + "' must be an integer, got '" + text + "'");
  }
  return value;
}

double ExperimentSpec::get_real(const std::string& key) const {
  const std::string text = get(key);
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    bad("parameter '" + key + "' must be a number, got '" + text + "'");
  }
  return value;
}

bool ExperimentSpec::get_bool(const std::string& key) const {
  const std::string text = get(key);
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  bad("parameter '" + key + "' must be 0/1/true/false, got '" + text + "'");
}

std::vector<std::string> ExperimentSpec::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream in(get(key));
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> experiment_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : all_defaults()) names.push_back(name);
  return names;
}

const Params& default_params(const std::string& name) {
  const auto& table = all_defaults();
  const auto it = table.find(name);
  if (it == table.end()) bad("unknown experiment '" + name + "'");
  return it->second;
}

Params parse_config_text(const std::string& text) {
  Params out;
  std::stringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad("config line " + std::to_string(number) + " has no '='");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) bad("config line " + std::to_string(number) + " has an empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

Params read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

ExperimentSpec parse_command_line(const std::vector<std::string>& args) {
  if (args.empty()) bad("missing experiment name");
  ExperimentSpec spec;
  spec.name = args[0];
  const Params& defaults = default_params(spec.name);

  Params flags;
  std::string config_path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& arg = args[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2) bad("expected --key, got '" + arg + "'");
    std::string key = arg.substr(2);
    std::string value;
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.erase(eq);
    } else {
      if (i + 1 >= args.size()) bad("flag --" + key + " needs a value");
      value = args[++i];
    }
    if (key == "config") {
      config_path = value;
    } else {
      flags[key] = value;
    }
  }

  // Defaults, then config file, then command line.
  Params resolved = defaults;
  std::string out_dir = ".";
  std::string seed = "0";
  const auto apply = [&](const Params& layer, const std::string& origin) {
    for (const auto& [key, value] : layer) {
      if (key == "out") {
        out_dir = value;
      } else if (key == "seed") {
        seed = value;
      } else if (defaults.count(key)) {
        resolved[key] = value;
      } else {
        bad("unknown key '" + key + "' for " + spec.name + " (" + origin + ")");
      }
    }
  };
  if (!config_path.empty()) apply(read_config_file(config_path), "config " + config_path);
  apply(flags, "command line");

  spec.params = std::move(resolved);
  spec.out_dir = out_dir;
  spec.seed = parse_seed(seed);
  return spec;
}

std::string manifest_text(const ExperimentSpec& spec) {
  std::string out;
  out += "experiment=" + spec.name + "\n";
  out += "seed=" + std::to_string(spec.seed) + "\n";
  out += "rng=" + std::string(Rng::kAlgorithm) + "\n";
  out += "out=" + spec.out_dir.string() + "\n";
  for (const auto& [key, value] : spec.params) out += key + "=" + value + "\n";
  return out;
}

}  // namespace oni::experiments
