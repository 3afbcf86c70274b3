#pragma once

// Dense real-matrix helpers shared by the orthogonalization code: norms,
// the symmetric eigensolver used as the inverse-square-root oracle, and
// singular-value diagnostics.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "oni/errors.hpp"

namespace oni {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

template <typename Scalar>
struct EigenPair {
  VectorX<Scalar> values;   // descending
  MatrixX<Scalar> vectors;  // column k pairs with values(k)
};

template <typename Derived>
typename Derived::Scalar frobenius_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.norm();
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::NonFinite, std::string(what) + " has NaN/Inf entries");
  }
}

template <typename Derived>
void require_same_shape(const Eigen::MatrixBase<Derived>& a, Eigen::Index rows, Eigen::Index cols,
                        const char* what) {
  if (a.rows() != rows || a.cols() != cols) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + " is " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + ", expected " + std::to_string(rows) + "x" +
                    std::to_string(cols));
  }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues in descending order.
///
/// Asymmetry is measured as ||s - s^T||_F relative to ||s||_F and must not
/// exceed 1e-12.
template <typename Derived>
EigenPair<typename Derived::Scalar> symmetric_eig(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  if (s.rows() != s.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "symmetric_eig needs a square matrix");
  }
  require_finite(s, "symmetric_eig input");
  const Scalar scale = s.norm();
  const Scalar asym = (s - s.transpose()).norm();
  if (asym > Scalar(1e-12) * scale) {
    throw Error(ErrorCode::NonSymmetric,
                "relative asymmetry " + std::to_string(double(asym / scale)) + " exceeds 1e-12");
  }

  const MatrixX<Scalar> sym = (s + s.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NonConvergence, "symmetric eigensolver did not converge");
  }

  // Eigen reports ascending order.
  EigenPair<Scalar> out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

/// Singular values, descending, from the eigenvalues of the smaller Gram
/// matrix. Tiny negative eigenvalues from rounding are clamped to zero.
template <typename Derived>
VectorX<typename Derived::Scalar> singular_values(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> gram = m.rows() <= m.cols() ? MatrixX<Scalar>(m * m.transpose())
                                                    : MatrixX<Scalar>(m.transpose() * m);
  VectorX<Scalar> values = symmetric_eig(gram).values;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    values(i) = std::sqrt(std::max(values(i), Scalar(0)));
  }
  return values;
}

/// sigma_max / sigma_min; +inf once sigma_min drops below 1e-14 * sigma_max.
template <typename Derived>
typename Derived::Scalar condition_number(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const VectorX<Scalar> sv = singular_values(m);
  const Scalar top = sv(0);
  const Scalar bottom = sv(sv.size() - 1);
  if (top <= Scalar(1e-14)) {
    throw Error(ErrorCode::ZeroMatrix, "condition_number of a zero matrix");
  }
  if (bottom < Scalar(1e-14) * top) {
    return std::numeric_limits<Scalar>::infinity();
  }
  return top / bottom;
}

}  // namespace oni
