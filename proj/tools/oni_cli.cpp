// Experiment runner:
//   oni <experiment> [--key value]... [--config path] [--out dir] [--seed N]

#include <iostream>
#include <string>
#include <vector>

#include "oni/errors.hpp"
#include "oni/experiments/runner.hpp"
#include "oni/experiments/spec.hpp"

namespace {

void usage(std::ostream& out) {
  out << "usage: oni <experiment> [--key value]... [--config path] [--out dir] [--seed N]\n"
         "experiments and their keys (defaults shown):\n";
  for (const auto& name : oni::experiments::experiment_names()) {
    out << "  " << name << "\n";
    for (const auto& [key, value] : oni::experiments::default_params(name)) {
      out << "      --" << key << " " << (value.empty() ? "\"\"" : value) << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace oni::experiments;
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    usage(args.empty() ? std::cerr : std::cout);
    return args.empty() ? kExitBadSpec : kExitOk;
  }

  ExperimentSpec spec;
  try {
    spec = parse_command_line(args);
  } catch (const oni::Error& e) {
    std::cerr << "oni: " << e.what() << "\n";
    return exit_code_for(e.code());
  }

  const RunOutcome outcome = run_experiment(spec, std::cout);
  for (const auto& file : outcome.files) std::cout << "wrote " << file.string() << "\n";
  if (outcome.exit_code != kExitOk) {
    std::cerr << "oni " << spec.name << ": " << outcome.message << "\n";
  }
  return outcome.exit_code;
}
