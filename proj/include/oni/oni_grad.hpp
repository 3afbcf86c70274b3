#pragma once

// Reverse-mode derivatives of oni_forward. Each forward stage (centering,
// bounding, Newton-Schulz loop, output scale) has its own adjoint and the two
// classic algorithms (plain and accelerated) are compositions of them.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "oni/errors.hpp"
#include "oni/matrix_kernels.hpp"
#include "oni/oni.hpp"

namespace oni {

struct GradCheckReport {
  double max_rel_error = 0.0;
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
  Matrix analytic;
  Matrix numeric;
};

namespace detail {

template <typename Scalar>
void check_cache(const OniCache<Scalar>& cache, const MatrixX<Scalar>& dw) {
  if (cache.b_list.size() != std::size_t(cache.config.iterations) + 1) {
    throw Error(ErrorCode::CacheMismatch, "B sequence length disagrees with the iteration count");
  }
  if (cache.y_list.size() != cache.b_list.size()) {
    throw Error(ErrorCode::CacheMismatch, "S B sequence length disagrees with the B sequence");
  }
  if (cache.config.compact_bound != cache.m.has_value()) {
    throw Error(ErrorCode::CacheMismatch, "compact-bound flag disagrees with the cached Gram");
  }
  require_same_shape(dw, cache.z.rows(), cache.z.cols(), "dL/dW");
}

/// dL/dW -> dL/dV through W = scale * B_T V and the Newton-Schulz loop.
///
/// Reverses the coupled steps P = (3I - B Y)/2, B' = P B, Y' = Y P with
/// Y_0 = S. Differentiating the single-variable recurrence instead gives the
/// same result in exact arithmetic but inherits its rounding blow-up once T
/// passes ~15 on ill-conditioned S.
template <typename Scalar>
MatrixX<Scalar> newton_adjoint(const OniCache<Scalar>& cache, const MatrixX<Scalar>& dw) {
  using Mat = MatrixX<Scalar>;
  const auto& b = cache.b_list;
  const auto& y = cache.y_list;
  const Mat& v = cache.v;
  const Eigen::Index n = cache.s.rows();
  const Mat identity = Mat::Identity(n, n);

  const Mat dw_scaled = Scalar(cache.config.scale) * dw;
  Mat dv = b.back().transpose() * dw_scaled;
  Mat db = dw_scaled * v.transpose();
  Mat dy = Mat::Zero(n, n);

  for (std::size_t t = b.size() - 1; t >= 1; --t) {
    const Mat& prev_b = b[t - 1];
    const Mat& prev_y = y[t - 1];
    const Mat half_step = Scalar(1.5) * identity - Scalar(0.5) * (prev_b * prev_y);
    const Mat dp = db * prev_b.transpose() + prev_y.transpose() * dy;
    Mat next_db = half_step.transpose() * db;
    next_db.noalias() -= Scalar(0.5) * (dp * prev_y.transpose());
    Mat next_dy = dy * half_step.transpose();
    next_dy.noalias() -= Scalar(0.5) * (prev_b.transpose() * dp);
    db = std::move(next_db);
    dy = std::move(next_dy);
  }
  // Y_0 = S = V V^T.
  dv.noalias() += (dy + dy.transpose()) * v;
  return dv;
}

/// dL/dV -> dL/dZ_used through either bounding.
template <typename Scalar>
MatrixX<Scalar> bound_adjoint(const OniCache<Scalar>& cache, const MatrixX<Scalar>& dv) {
  const MatrixX<Scalar>& zu = cache.z_used;
  const Scalar delta = cache.denom;
  const Scalar inner = (dv.array() * zu.array()).sum();  // tr(dV^T Z)
  if (cache.m) {
    // dL/dM = -tr(dV^T Z_c) / (2 delta^5) M, M symmetric.
    const MatrixX<Scalar> dm = (-inner / (Scalar(2) * std::pow(delta, 5))) * (*cache.m);
    return dv / delta + (dm + dm.transpose()) * zu;
  }
  return (dv - (inner / (delta * delta)) * zu) / delta;
}

/// Adjoint of Z_c = Z (I - 1 1^T / d): subtract each row's mean.
template <typename Scalar>
MatrixX<Scalar> center_adjoint(const MatrixX<Scalar>& dzc) {
  return center_rows(dzc);
}

}  // namespace detail

/// Backward pass for any flag combination.
template <typename Scalar>
MatrixX<Scalar> oni_backward(const OniCache<Scalar>& cache, const MatrixX<Scalar>& dw) {
  detail::check_cache(cache, dw);
  const MatrixX<Scalar> dv = detail::newton_adjoint(cache, dw);
  const MatrixX<Scalar> dzu = detail::bound_adjoint(cache, dv);
  return cache.config.centering ? detail::center_adjoint(dzu) : dzu;
}

/// Plain ONI (Frobenius bounding, no centering).
template <typename Scalar>
MatrixX<Scalar> oni_backward_basic(const OniCache<Scalar>& cache, const MatrixX<Scalar>& dw) {
  if (cache.config.centering || cache.config.compact_bound) {
    throw Error(ErrorCode::CacheMismatch, "oni_backward_basic needs centering and compact bound off");
  }
  return oni_backward(cache, dw);
}

/// Accelerated ONI (centering plus compact bounding).
template <typename Scalar>
MatrixX<Scalar> oni_backward_accel(const OniCache<Scalar>& cache, const MatrixX<Scalar>& dw) {
  if (!cache.config.centering || !cache.config.compact_bound) {
    throw Error(ErrorCode::CacheMismatch, "oni_backward_accel needs centering and compact bound on");
  }
  return oni_backward(cache, dw);
}

/// Central differences of L(Z) = <dw, forward_map(Z)>.
template <typename Forward>
Matrix finite_diff_grad(Forward&& forward_map, const Matrix& z, const Matrix& dw, double h = 1e-5) {
  if (!(h >= 1e-7 && h <= 1e-3)) {
    throw Error(ErrorCode::BadConfig, "finite-difference step must lie in [1e-7, 1e-3]");
  }
  const auto loss = [&](const Matrix& point) {
    const Matrix w = forward_map(point);
    require_same_shape(w, dw.rows(), dw.cols(), "probe output");
    return (w.array() * dw.array()).sum();
  };
  Matrix grad(z.rows(), z.cols());
  Matrix probe = z;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double original = probe(i, j);
      probe(i, j) = original + h;
      const double up = loss(probe);
      probe(i, j) = original - h;
      const double down = loss(probe);
      probe(i, j) = original;
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

inline Matrix finite_diff_grad(const Matrix& z, const OniConfig& cfg, const Matrix& dw,
                               double h = 1e-5) {
  return finite_diff_grad([&](const Matrix& p) { return oni_forward(p, cfg).w; }, z, dw, h);
}

/// max_ij |a_ij - n_ij| / max(max|a|, max|n|), so entries are judged against
/// the gradient's own magnitude rather than against themselves.
inline GradCheckReport compare_gradients(const Matrix& analytic, const Matrix& numeric) {
  require_same_shape(numeric, analytic.rows(), analytic.cols(), "numeric gradient");
  GradCheckReport report;
  report.analytic = analytic;
  report.numeric = numeric;
  const double magnitude = std::max({analytic.cwiseAbs().maxCoeff(),
                                     numeric.cwiseAbs().maxCoeff(), 1e-12});
  const Matrix diff = (analytic - numeric).cwiseAbs();
  report.max_rel_error = diff.maxCoeff(&report.worst_row, &report.worst_col) / magnitude;
  return report;
}

inline GradCheckReport gradient_check(const Matrix& z, const OniConfig& cfg, const Matrix& dw,
                                      double h = 1e-5) {
  const auto forward = oni_forward(z, cfg);
  return compare_gradients(oni_backward(forward.cache, dw), finite_diff_grad(z, cfg, dw, h));
}

}  // namespace oni
