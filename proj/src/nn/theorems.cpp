#include "oni/nn/theorems.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oni/errors.hpp"
#include "oni/oni.hpp"
#include "oni/random.hpp"

namespace oni::nn {

namespace {

constexpr int kConvergedIterations = 30;

void check_args(int n, int d, long samples) {
  if (n < 1 || d < 1) throw Error(ErrorCode::BadConfig, "n and d must be >= 1");
  if (samples < 2) throw Error(ErrorCode::BadConfig, "need at least 2 samples");
}

/// max(|mean|, |cov - I|) over entries, rows of `h` being samples.
double moment_error(const Matrix& h) {
  const Vector mean = h.colwise().mean().transpose();
  const Matrix centered = h.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / double(h.rows() - 1);
  const Matrix gap = cov - Matrix::Identity(cov.rows(), cov.cols());
  return std::max(mean.cwiseAbs().maxCoeff(), gap.cwiseAbs().maxCoeff());
}

}  // namespace

Matrix converged_oni_weight(int n, int d, std::uint64_t seed, double scale) {
  OniConfig cfg;
  cfg.iterations = kConvergedIterations;
  cfg.compact_bound = true;
  cfg.scale = scale;
  return oni_forward(Rng(seed).normal_matrix(n, d), cfg).w;
}

Theorem1Report theorem1_check(int n, int d, long samples, std::uint64_t seed, double norm_tol,
                              double cov_tol) {
  check_args(n, d, samples);
  Theorem1Report r;
  r.n = n;
  r.d = d;
  r.samples = samples;
  const Matrix w = converged_oni_weight(n, d, derive_seed(seed, 0));
  const auto diag = orthogonality_error(w);
  r.delta_row = diag.delta_row;
  r.delta_col = diag.delta_col;

  Rng rng(derive_seed(seed, 1));
  const Matrix x = rng.normal_matrix(samples, d);
  const Matrix g = rng.normal_matrix(samples, n);
  const Matrix h = x * w.transpose();
  const Matrix dx = g * w;

  r.norm_error = (h.rowwise().norm() - x.rowwise().norm()).cwiseAbs().maxCoeff();
  r.grad_norm_error = (dx.rowwise().norm() - g.rowwise().norm()).cwiseAbs().maxCoeff();
  r.cov_error = moment_error(h);
  r.grad_cov_error = moment_error(dx);

  r.norm_applies = n >= d;
  r.cov_applies = n <= d;
  r.passed = true;
  if (r.norm_applies) {
    r.passed = r.passed && r.norm_error <= norm_tol && r.grad_cov_error <= cov_tol;
  }
  if (r.cov_applies) {
    r.passed = r.passed && r.cov_error <= cov_tol && r.grad_norm_error <= norm_tol;
  }
  return r;
}

Theorem2Report theorem2_check(int n, int d, long samples, std::uint64_t seed, double scale) {
  check_args(n, d, samples);
  Theorem2Report r;
  r.n = n;
  r.d = d;
  r.samples = samples;
  r.scale = scale;
  const Matrix w = converged_oni_weight(n, d, derive_seed(seed, 0), scale);
  const Matrix x = Rng(derive_seed(seed, 1)).normal_matrix(samples, d);
  const Matrix active = ((x * w.transpose()).array() > 0.0).cast<double>().matrix();

  // (J J^T)_ij = 1[h_i > 0] 1[h_j > 0] w_i . w_j
  const Matrix co_active = active.transpose() * active / double(samples);
  r.expectation = co_active.cwiseProduct(w * w.transpose());
  r.max_deviation = (r.expectation - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  r.mean_diagonal = r.expectation.diagonal().mean();
  Matrix off = r.expectation;
  off.diagonal().setZero();
  r.max_off_diagonal = off.cwiseAbs().maxCoeff();
  return r;
}

}  // namespace oni::nn
