#pragma once

// Orthogonalization by Newton's iteration: spectral bounding, optional row
// centering, Newton-Schulz steps towards S^{-1/2}, and the orthogonality
// diagnostics used throughout the experiments.

#include <Eigen/Dense>
#include <unsupported/Eigen/CXX11/Tensor>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "oni/errors.hpp"
#include "oni/matrix_kernels.hpp"

namespace oni {

struct OniConfig {
  int iterations = 5;
  bool centering = false;
  bool compact_bound = false;
  double scale = 1.0;
  double zero_norm_eps = 1e-12;

  static constexpr int kMaxIterations = 100;

  void validate() const {
    if (iterations < 0 || iterations > kMaxIterations) {
      throw Error(ErrorCode::BadConfig,
                  "iterations must lie in [0, 100], got " + std::to_string(iterations));
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw Error(ErrorCode::BadConfig, "scale must be a positive finite number");
    }
    if (!(zero_norm_eps > 0.0)) {
      throw Error(ErrorCode::BadConfig, "zero_norm_eps must be positive");
    }
  }
};

/// Everything the backward pass needs from one forward call.
template <typename Scalar>
struct OniCache {
  MatrixX<Scalar> z;       // raw proxy parameters
  MatrixX<Scalar> z_used;  // z, or its row-centered version
  MatrixX<Scalar> v;       // z_used / denom
  MatrixX<Scalar> s;       // v * v^T
  std::vector<MatrixX<Scalar>> b_list;  // B_0 = I ... B_T
  std::vector<MatrixX<Scalar>> y_list;  // S B_0 ... S B_T
  Scalar denom = Scalar(1);
  std::optional<MatrixX<Scalar>> m;  // z_used * z_used^T, compact bounding only
  OniConfig config;
};

template <typename Scalar>
struct OniResult {
  MatrixX<Scalar> w;
  OniCache<Scalar> cache;
};

template <typename Scalar>
struct Bounded {
  MatrixX<Scalar> v;
  Scalar denom;
};

struct OrthoDiagnostics {
  double delta_row = 0.0;
  double delta_col = 0.0;
  Vector sigmas;
  double cond = 0.0;
};

namespace detail {

template <typename Derived>
void require_nonzero(const Eigen::MatrixBase<Derived>& z, double eps, const char* what) {
  if (!(double(z.norm()) > eps)) {
    throw Error(ErrorCode::ZeroMatrix, std::string(what) + " has Frobenius norm <= eps");
  }
}

template <typename Scalar>
Bounded<Scalar> compact_bound_from_gram(const MatrixX<Scalar>& z, const MatrixX<Scalar>& gram) {
  const Scalar denom = std::sqrt(gram.norm());
  return {z / denom, denom};
}

}  // namespace detail

/// V = Z / ||Z||_F.
template <typename Derived>
Bounded<typename Derived::Scalar> frobenius_bound(const Eigen::MatrixBase<Derived>& z,
                                                  double zero_norm_eps = 1e-12) {
  using Scalar = typename Derived::Scalar;
  detail::require_nonzero(z, zero_norm_eps, "frobenius_bound input");
  const Scalar denom = z.norm();
  return {MatrixX<Scalar>(z / denom), denom};
}

/// V = Z / sqrt(||Z Z^T||_F). Tighter than the Frobenius bound whenever Z has
/// more than one nonzero singular value.
template <typename Derived>
Bounded<typename Derived::Scalar> compact_spectral_bound(const Eigen::MatrixBase<Derived>& z,
                                                         double zero_norm_eps = 1e-12) {
  using Scalar = typename Derived::Scalar;
  detail::require_nonzero(z, zero_norm_eps, "compact_spectral_bound input");
  const MatrixX<Scalar> zz = z;
  const MatrixX<Scalar> gram = zz * zz.transpose();
  return detail::compact_bound_from_gram(zz, gram);
}

/// Z - (1/d) Z 1 1^T: every row shifted to zero mean.
template <typename Derived>
MatrixX<typename Derived::Scalar> center_rows(const Eigen::MatrixBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  MatrixX<Scalar> out = z;
  out.colwise() -= z.rowwise().mean();
  return out;
}

/// B_0..B_T and Y_t = S B_t of the coupled Newton-Schulz iteration.
template <typename Scalar>
struct NewtonSequence {
  std::vector<MatrixX<Scalar>> b;
  std::vector<MatrixX<Scalar>> y;
};

/// Newton-Schulz sequence B_0 = I, B_t = 3/2 B_{t-1} - 1/2 B_{t-1}^3 S.
///
/// The recurrence is evaluated in coupled form: with Y_t = S B_t,
///   P_t = (3I - B_t Y_t) / 2,  B_{t+1} = P_t B_t,  Y_{t+1} = Y_t P_t,
/// which yields the same polynomial B_t = p_t(S) in exact arithmetic. The
/// single-variable form amplifies rounding by |1 - (sqrt(r) + r)/2| per step
/// once converged (r a ratio of eigenvalues of S), so it blows up for any
/// S with condition number above ~2.4 or with a null space.
///
/// Every component of a convergent run is bounded by 1.5^t (the step can at
/// most multiply by 3/2), so the sequence is declared divergent once
/// ||B_t||_F exceeds both 1e6 and twice that envelope. The envelope keeps
/// rank-deficient S legal: null-space components of B grow as 1.5^t without
/// reaching W.
template <typename Derived>
NewtonSequence<typename Derived::Scalar> newton_schulz_coupled(const Eigen::MatrixBase<Derived>& s,
                                                               int t) {
  using Scalar = typename Derived::Scalar;
  using Mat = MatrixX<Scalar>;
  if (s.rows() != s.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "newton_schulz needs a square covariance");
  }
  if (t < 0) {
    throw Error(ErrorCode::BadConfig, "newton_schulz needs t >= 0");
  }
  const Eigen::Index n = s.rows();
  const Mat identity = Mat::Identity(n, n);
  NewtonSequence<Scalar> seq;
  seq.b.reserve(std::size_t(t) + 1);
  seq.y.reserve(std::size_t(t) + 1);
  seq.b.push_back(identity);
  seq.y.push_back(s);

  double envelope = std::sqrt(double(n));
  for (int step = 1; step <= t; ++step) {
    const Mat half_step = Scalar(1.5) * identity - Scalar(0.5) * (seq.b.back() * seq.y.back());
    Mat next = half_step * seq.b.back();
    Mat next_y = seq.y.back() * half_step;

    envelope *= 1.5;
    const double norm = double(next.norm());
    if (!std::isfinite(norm) || !next_y.allFinite() || (norm > 1e6 && norm > 2.0 * envelope)) {
      throw Error(ErrorCode::Divergence, "||B_" + std::to_string(step) + "||_F = " +
                                             std::to_string(norm) +
                                             "; convergence condition ||I - S||_2 < 1 violated");
    }
    seq.b.push_back(std::move(next));
    seq.y.push_back(std::move(next_y));
  }
  return seq;
}

template <typename Derived>
std::vector<MatrixX<typename Derived::Scalar>> newton_schulz(const Eigen::MatrixBase<Derived>& s,
                                                             int t) {
  return newton_schulz_coupled(s, t).b;
}

/// Full forward pass: W = scale * B_T * V with the cache the backward pass
/// consumes.
template <typename Derived>
OniResult<typename Derived::Scalar> oni_forward(const Eigen::MatrixBase<Derived>& z,
                                                const OniConfig& cfg) {
  using Scalar = typename Derived::Scalar;
  using Mat = MatrixX<Scalar>;
  cfg.validate();
  require_finite(z, "oni_forward input");
  detail::require_nonzero(z, cfg.zero_norm_eps, "oni_forward input");

  OniCache<Scalar> cache;
  cache.config = cfg;
  cache.z = z;
  if (cfg.centering) {
    cache.z_used = center_rows(cache.z);
    detail::require_nonzero(cache.z_used, cfg.zero_norm_eps, "centered oni_forward input");
  } else {
    cache.z_used = cache.z;
  }

  if (cfg.compact_bound) {
    cache.m = Mat(cache.z_used * cache.z_used.transpose());
    auto bounded = detail::compact_bound_from_gram(cache.z_used, *cache.m);
    cache.v = std::move(bounded.v);
    cache.denom = bounded.denom;
  } else {
    cache.denom = cache.z_used.norm();
    cache.v = cache.z_used / cache.denom;
  }
  cache.s = cache.v * cache.v.transpose();
  auto seq = newton_schulz_coupled(cache.s, cfg.iterations);
  cache.b_list = std::move(seq.b);
  cache.y_list = std::move(seq.y);

  Mat w = Scalar(cfg.scale) * (cache.b_list.back() * cache.v);
  return {std::move(w), std::move(cache)};
}

/// Orthogonalizes contiguous row groups independently. The final group holds
/// the remainder when rows is not a multiple of group_size.
template <typename Derived>
MatrixX<typename Derived::Scalar> group_oni_forward(const Eigen::MatrixBase<Derived>& z,
                                                    int group_size, const OniConfig& cfg) {
  using Scalar = typename Derived::Scalar;
  if (group_size < 1) {
    throw Error(ErrorCode::BadGroupSize, "group_size must be >= 1");
  }
  const Eigen::Index rows = z.rows();
  const Eigen::Index effective = std::min<Eigen::Index>(group_size, rows);
  if (effective > z.cols()) {
    throw Error(ErrorCode::BadGroupSize, "group of " + std::to_string(effective) +
                                             " rows exceeds " + std::to_string(z.cols()) +
                                             " columns");
  }
  MatrixX<Scalar> w(rows, z.cols());
  for (Eigen::Index start = 0; start < rows; start += effective) {
    const Eigen::Index count = std::min(effective, rows - start);
    w.middleRows(start, count) = oni_forward(z.middleRows(start, count), cfg).w;
  }
  return w;
}

/// delta_row = ||W W^T - I||_F, delta_col = ||W^T W - I||_F, plus spectrum.
template <typename Derived>
OrthoDiagnostics orthogonality_error(const Eigen::MatrixBase<Derived>& w) {
  using Scalar = typename Derived::Scalar;
  using Mat = MatrixX<Scalar>;
  OrthoDiagnostics out;
  out.delta_row = double((w * w.transpose() - Mat::Identity(w.rows(), w.rows())).norm());
  out.delta_col = double((w.transpose() * w - Mat::Identity(w.cols(), w.cols())).norm());
  out.sigmas = singular_values(w).template cast<double>();
  const double top = out.sigmas(0);
  const double bottom = out.sigmas(out.sigmas.size() - 1);
  out.cond = (top <= 1e-14 || bottom < 1e-14 * top) ? std::numeric_limits<double>::infinity()
                                                     : top / bottom;
  return out;
}

// Convolution filters n x d x Fh x Fw unroll into n x (d*Fh*Fw) rows with the
// input-channel index slowest and filter width fastest.
template <typename Scalar>
using FilterTensor = Eigen::Tensor<Scalar, 4, Eigen::RowMajor>;

template <typename Scalar>
MatrixX<Scalar> reshape_conv_filters(const FilterTensor<Scalar>& filters) {
  const auto n = filters.dimension(0);
  const auto d = filters.dimension(1);
  const auto fh = filters.dimension(2);
  const auto fw = filters.dimension(3);
  MatrixX<Scalar> out(n, d * fh * fw);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < d; ++c)
      for (Eigen::Index h = 0; h < fh; ++h)
        for (Eigen::Index x = 0; x < fw; ++x) out(i, (c * fh + h) * fw + x) = filters(i, c, h, x);
  return out;
}

template <typename Derived>
FilterTensor<typename Derived::Scalar> unreshape_conv_filters(const Eigen::MatrixBase<Derived>& w,
                                                              Eigen::Index d, Eigen::Index fh,
                                                              Eigen::Index fw) {
  if (d * fh * fw != w.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "d*Fh*Fw must equal the matrix column count");
  }
  FilterTensor<typename Derived::Scalar> out(w.rows(), d, fh, fw);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index c = 0; c < d; ++c)
      for (Eigen::Index h = 0; h < fh; ++h)
        for (Eigen::Index x = 0; x < fw; ++x) out(i, c, h, x) = w(i, (c * fh + h) * fw + x);
  return out;
}

}  // namespace oni
