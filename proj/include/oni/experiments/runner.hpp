#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "oni/errors.hpp"
#include "oni/experiments/spec.hpp"

namespace oni::experiments {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitBadSpec = 64;
inline constexpr int kExitIo = 74;

int exit_code_for(ErrorCode code);

struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;  // first failing check or error text
  std::vector<std::filesystem::path> files;
};

/// Creates out_dir, writes manifest.txt and the experiment's CSVs. Never
/// throws for oni::Error; the outcome carries the exit code instead.
///
///   converge   convergence.csv  variant,seed,iter,delta_row,delta_col,sigma_min,sigma_max
///   table-a2   table_a2.csv     method,group,seed,delta_row,delta_col
///              table_a2_summary.csv  method,group,delta_row_mean,delta_col_mean
///   gradcheck  gradcheck.csv    shape,flags,T,max_rel_error
///   theorems   theorems.csv     property,n,d,scale,value,tolerance,applies,passed
///   train-mlp  curve.csv        epoch,train_loss,train_error,test_error
///              probe.csv        layer,activation,gradient   (at initialization)
///              orthogonality.csv step,layer,delta_row,delta_col,sigma_max  (track_steps > 0)
///   bench      bench.csv        rows,cols,T,repeats,seconds_per_call
RunOutcome run_experiment(const ExperimentSpec& spec, std::ostream& log);

}  // namespace oni::experiments
