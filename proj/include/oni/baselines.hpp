#pragma once

// Comparison methods: eigendecomposition-based orthogonalization (OLM),
// spectral normalization and weight normalization.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>

#include "oni/errors.hpp"
#include "oni/matrix_kernels.hpp"
#include "oni/random.hpp"

namespace oni {

/// W = D diag(lambda^{-1/2}) D^T V with S = V V^T = D diag(lambda) D^T.
/// Eigenvalues below 1e-12 * lambda_max get a zero inverse square root.
template <typename Derived>
MatrixX<typename Derived::Scalar> olm_orthogonalize(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  if (!(v.norm() > Scalar(0))) {
    throw Error(ErrorCode::ZeroMatrix, "olm_orthogonalize of a zero matrix");
  }
  const MatrixX<Scalar> s = v * v.transpose();
  const auto eig = symmetric_eig(s);
  const Scalar cutoff = Scalar(1e-12) * eig.values(0);
  VectorX<Scalar> inv_sqrt(eig.values.size());
  for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i) {
    inv_sqrt(i) = eig.values(i) > cutoff ? Scalar(1) / std::sqrt(eig.values(i)) : Scalar(0);
  }
  const MatrixX<Scalar> s_inv_sqrt =
      eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose();
  return s_inv_sqrt * v;
}

/// S^{-1/2} by the same pseudo-inverse rule, for oracle comparisons.
template <typename Derived>
MatrixX<typename Derived::Scalar> inverse_sqrt_psd(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  const auto eig = symmetric_eig(s);
  const Scalar cutoff = Scalar(1e-12) * std::max(eig.values(0), Scalar(0));
  VectorX<Scalar> inv_sqrt(eig.values.size());
  for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i) {
    inv_sqrt(i) = eig.values(i) > cutoff ? Scalar(1) / std::sqrt(eig.values(i)) : Scalar(0);
  }
  return eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose();
}

/// Persistent power-iteration vectors for one weight matrix.
struct SnState {
  Vector u;
  Vector v;
  bool initialized = false;
};

struct SnResult {
  Matrix w;
  SnState state;
  double sigma = 0.0;
};

/// Divides w by the power-iteration estimate of its top singular value.
/// The first call draws u from N(0, I) using `seed`; later calls continue
/// from the stored vectors.
inline SnResult spectral_normalize(const Matrix& w, SnState state, int n_iters,
                                   std::uint64_t seed = 0) {
  if (n_iters < 1) {
    throw Error(ErrorCode::BadConfig, "spectral_normalize needs n_iters >= 1");
  }
  if (!(w.norm() > 0.0)) {
    throw Error(ErrorCode::ZeroMatrix, "spectral_normalize of a zero matrix");
  }
  if (!state.initialized) {
    Rng rng(seed);
    state.u = rng.normal_matrix(w.rows(), 1);
    state.u.normalize();
    state.v = Vector::Zero(w.cols());
    state.initialized = true;
  }
  require_same_shape(state.u, w.rows(), 1, "SnState.u");
  for (int k = 0; k < n_iters; ++k) {
    state.v = w.transpose() * state.u;
    state.v.normalize();
    state.u = w * state.v;
    state.u.normalize();
  }
  const double sigma = state.u.dot(w * state.v);
  return {w / sigma, std::move(state), sigma};
}

/// Every row scaled to unit Euclidean norm (unit gain).
template <typename Derived>
MatrixX<typename Derived::Scalar> weight_normalize(const Eigen::MatrixBase<Derived>& w) {
  using Scalar = typename Derived::Scalar;
  const VectorX<Scalar> norms = w.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) > Scalar(0))) {
      throw Error(ErrorCode::ZeroRow, "row " + std::to_string(i) + " has zero norm");
    }
  }
  return norms.cwiseInverse().asDiagonal() * w;
}

}  // namespace oni
