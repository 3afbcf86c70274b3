#include "doctest.h"

#include <cmath>
#include <limits>

#include "oni/matrix_kernels.hpp"
#include "oni/oni.hpp"
#include "oni/random.hpp"

using namespace oni;

TEST_CASE("frobenius_norm") {
  CHECK(frobenius_norm(Matrix::Identity(2, 2)) == doctest::Approx(std::sqrt(2.0)));
  CHECK(frobenius_norm(Matrix::Zero(3, 4)) == 0.0);
  Matrix row(1, 2);
  row << 3, 4;
  CHECK(frobenius_norm(row) == doctest::Approx(5.0));
}

TEST_CASE("symmetric_eig on diagonal and identity inputs") {
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 1, 4;
  const auto eig = symmetric_eig(d);
  CHECK(eig.values(0) == doctest::Approx(4.0));
  CHECK(eig.values(1) == doctest::Approx(1.0));
  // Columns are a signed permutation of the identity.
  CHECK(std::abs(eig.vectors(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(eig.vectors(0, 1)) == doctest::Approx(1.0));

  const auto ident = symmetric_eig(Matrix::Identity(3, 3));
  for (int i = 0; i < 3; ++i) CHECK(ident.values(i) == doctest::Approx(1.0));
}

TEST_CASE("symmetric_eig reconstructs random symmetric matrices") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Matrix a = rng.normal_matrix(8, 8);
    const Matrix s = a + a.transpose();
    const auto eig = symmetric_eig(s);
    const Matrix& q = eig.vectors;
    CHECK((q.transpose() * q - Matrix::Identity(8, 8)).norm() <= 1e-10);
    const Matrix rebuilt = q * eig.values.asDiagonal() * q.transpose();
    CHECK((rebuilt - s).norm() / s.norm() <= 1e-10);
    for (int i = 0; i + 1 < 8; ++i) CHECK(eig.values(i) >= eig.values(i + 1));
  }
}

TEST_CASE("symmetric_eig rejects asymmetric and non-square input") {
  Matrix a(2, 2);
  a << 1, 2, 0, 1;
  CHECK_THROWS_AS(symmetric_eig(a), Error);
  try {
    symmetric_eig(a);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonSymmetric);
  }
  CHECK_THROWS_AS(symmetric_eig(Matrix::Zero(2, 3)), Error);
}

TEST_CASE("singular_values") {
  const Vector ident = singular_values(Matrix::Identity(2, 2));
  CHECK(ident(0) == doctest::Approx(1.0));
  CHECK(ident(1) == doctest::Approx(1.0));

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  const Vector sv = singular_values(d);
  CHECK(sv(0) == doctest::Approx(2.0));
  CHECK(sv(1) == 0.0);

  Rng rng(3);
  const Matrix m = rng.normal_matrix(5, 9);
  const Vector s = singular_values(m);
  CHECK(s.size() == 5);
  CHECK(s.squaredNorm() == doctest::Approx(m.squaredNorm()).epsilon(1e-9));
}

TEST_CASE("singular values square-sum equals the squared Frobenius norm") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rows = Eigen::Index(1 + rng.below(12));
    const auto cols = Eigen::Index(1 + rng.below(12));
    const Matrix m = rng.normal_matrix(rows, cols, rng.normal(), 1.0 + 3.0 * rng.uniform());
    const Vector s = singular_values(m);
    CHECK(s.size() == std::min(rows, cols));
    CHECK(std::abs(s.squaredNorm() - m.squaredNorm()) <= 1e-9 * m.squaredNorm());
  }
}

TEST_CASE("Gram eigenvalues are non-negative up to rounding") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix m = rng.normal_matrix(10, 4);
    m /= m.norm();
    const auto eig = symmetric_eig(Matrix(m * m.transpose()));
    CHECK(eig.values.minCoeff() >= -1e-12);
  }
}

TEST_CASE("condition_number") {
  CHECK(condition_number(Matrix::Identity(4, 4)) == doctest::Approx(1.0));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 10, 1;
  CHECK(condition_number(d) == doctest::Approx(10.0));

  Matrix singular = Matrix::Zero(2, 2);
  singular(0, 0) = 1.0;
  CHECK(condition_number(singular) == std::numeric_limits<double>::infinity());

  try {
    condition_number(Matrix::Zero(3, 3));
    FAIL("expected ZeroMatrix");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroMatrix);
  }
}

TEST_CASE("centering improves conditioning of N(3,1) proxies") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Matrix z = rng.normal_matrix(64, 256, 3.0, 1.0);
    CHECK(condition_number(center_rows(z)) < condition_number(z));
  }
}
