#pragma once

#include <cstdint>

#include "oni/matrix_kernels.hpp"

namespace oni::nn {

/// Monte-Carlo checks of the signal-propagation properties of h = W x for
/// a converged ONI weight W (T = 30, compact bounding, scale 1):
///   (1) |h| = |x|                         holds when n >= d
///   (2) E h = 0, cov(h) = I               holds when n <= d
///   (3) |W^T g| = |g|                     holds when n <= d
///   (4) E W^T g = 0, cov(W^T g) = I       holds when n >= d
/// with x, g ~ N(0, I). Statistics are computed for every property; only
/// the applicable ones decide `passed`.
struct Theorem1Report {
  int n = 0;
  int d = 0;
  long samples = 0;
  double delta_row = 0.0;
  double delta_col = 0.0;
  double norm_error = 0.0;        // (1) max |(|h| - |x|)|
  double cov_error = 0.0;         // (2) max entrywise |cov(h) - I| and |mean(h)|
  double grad_norm_error = 0.0;   // (3)
  double grad_cov_error = 0.0;    // (4)
  bool norm_applies = false;
  bool cov_applies = false;
  bool passed = false;
};

Theorem1Report theorem1_check(int n, int d, long samples, std::uint64_t seed,
                              double norm_tol = 1e-9, double cov_tol = 0.05);

/// E_x(J J^T) for J = diag(1[h > 0]) W, W = scale * ONI(Z), x ~ N(0, I).
struct Theorem2Report {
  int n = 0;
  int d = 0;
  long samples = 0;
  double scale = 0.0;
  Matrix expectation;
  double max_deviation = 0.0;  // max |E(J J^T) - I|
  double mean_diagonal = 0.0;
  double max_off_diagonal = 0.0;
};

Theorem2Report theorem2_check(int n, int d, long samples, std::uint64_t seed, double scale);

/// Weight used by both checks.
Matrix converged_oni_weight(int n, int d, std::uint64_t seed, double scale = 1.0);

}  // namespace oni::nn
