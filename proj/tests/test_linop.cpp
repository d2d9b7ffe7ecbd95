#include "madmm/linop.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace madmm;

namespace {

Matrix gaussian(Index r, Index c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

}  // namespace

TEST(LinearMap, DenseAdjointSatisfiesInnerProductIdentity) {
  const Matrix m = gaussian(4, 3, 1);
  const LinearMap op = LinearMap::dense(m);
  EXPECT_EQ(op.in_dim(), 3);
  EXPECT_EQ(op.out_dim(), 4);
  const Vector x = gaussian(3, 1, 2), y = gaussian(4, 1, 3);
  EXPECT_NEAR(op.apply(x).dot(y), x.dot(op.apply_adjoint(y)), 1e-12);
  const LinearMap adj = op.adjoint();
  EXPECT_EQ(adj.in_dim(), 4);
  EXPECT_TRUE(adj.apply(y).isApprox(m.transpose() * y, 1e-14));
}

TEST(LinearMap, ZeroAndIdentity) {
  const Vector x = gaussian(3, 1, 4);
  EXPECT_EQ(LinearMap::zero(3, 2).apply(x), Vector::Zero(2));
  EXPECT_EQ(LinearMap::identity(3).apply(x), x);
  EXPECT_EQ(materialize(LinearMap::identity(3)), Matrix::Identity(3, 3));
}

TEST(LinearMap, MatrixFreeMaterializesColumnByColumn) {
  const Matrix m = gaussian(2, 3, 5);
  const LinearMap op(
      3, 2, [m](const Vector& x) { return Vector(m * x); },
      [m](const Vector& y) { return Vector(m.transpose() * y); });
  EXPECT_EQ(op.dense_backing(), nullptr);
  EXPECT_TRUE(materialize(op).isApprox(m, 1e-15));
}

TEST(LinearMap, DimensionMismatchThrows) {
  const LinearMap op = LinearMap::dense(Matrix::Ones(2, 3));
  try {
    op.apply(Vector::Ones(2));
    FAIL() << "expected a dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension_mismatch);
  }
}

TEST(SelfAdjoint, AsymmetricDenseIsRejected) {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = 1.0;
  EXPECT_THROW(SelfAdjointOperator::dense(m), Error);
}

TEST(SelfAdjoint, AlgebraMatchesDense) {
  const Matrix g = gaussian(3, 3, 6);
  const Matrix a = g * g.transpose();
  const Vector d = Vector::LinSpaced(3, 1.0, 3.0);
  const auto op = SelfAdjointOperator::dense(a) + SelfAdjointOperator::diagonal(d).scaled(2.0) -
                  SelfAdjointOperator::identity(3, 0.5);
  const Matrix want = a + Matrix(2.0 * d.asDiagonal()) - 0.5 * Matrix::Identity(3, 3);
  EXPECT_TRUE(materialize(op).isApprox(want, 1e-13));
}

TEST(SelfAdjoint, GramIsScaledMMStar) {
  const Matrix m = gaussian(3, 5, 7);
  const auto g = SelfAdjointOperator::gram(LinearMap::dense(m), 1.5);
  EXPECT_EQ(g.dim(), 3);
  EXPECT_TRUE(materialize(g).isApprox(1.5 * m * m.transpose(), 1e-13));
}

TEST(SelfAdjoint, BlockDiagonalAndCurvatureAssembly) {
  const Matrix g = gaussian(5, 5, 8);
  const Matrix full = g * g.transpose();
  const BlockCurvature bc = BlockCurvature::from_dense(full, 2);
  EXPECT_EQ(bc.u_dim(), 2);
  EXPECT_EQ(bc.v_dim(), 3);
  EXPECT_TRUE(materialize(bc.assembled()).isApprox(full, 1e-13));

  const auto bd = block_diagonal(SelfAdjointOperator::identity(2, 3.0),
                                 SelfAdjointOperator::zero(1));
  Matrix want = Matrix::Zero(3, 3);
  want(0, 0) = want(1, 1) = 3.0;
  EXPECT_EQ(materialize(bd), want);
  EXPECT_EQ(materialize(BlockCurvature::zero(2, 2).assembled()), Matrix::Zero(4, 4));
}

TEST(Seminorm, ClampsRoundoffNegativesOnly) {
  const Vector x = Vector::Ones(2);
  Matrix tiny = Matrix::Zero(2, 2);
  tiny(0, 0) = -1e-14;
  EXPECT_EQ(seminorm_sq(SelfAdjointOperator::dense(tiny, false), x), 0.0);
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 0) = -1.0;
  EXPECT_DOUBLE_EQ(seminorm_sq(SelfAdjointOperator::dense(neg, false), x), -1.0);
}

TEST(Materialize, CapIsEnforced) {
  try {
    materialize(SelfAdjointOperator::identity(5), 4);
    FAIL() << "expected materialize_cap";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::materialize_cap);
  }
  EXPECT_NO_THROW(materialize(SelfAdjointOperator::identity(4), 4));
}

TEST(Spectrum, ExtremesAndMinEigenvector) {
  Vector d(3);
  d << 3.0, -1.0, 2.0;
  const SpectrumSummary s = spectrum(SelfAdjointOperator::diagonal(d));
  EXPECT_DOUBLE_EQ(s.lambda_min, -1.0);
  EXPECT_DOUBLE_EQ(s.lambda_max, 3.0);
  EXPECT_NEAR(std::abs(s.min_eigenvector(1)), 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(min_eigenvalue(SelfAdjointOperator::diagonal(d)), -1.0);
  EXPECT_DOUBLE_EQ(max_eigenvalue(SelfAdjointOperator::diagonal(d)), 3.0);
}

TEST(Spectrum, OperatorNorm) {
  // Singular values of [[3, 0], [4, 5]] are 3 sqrt 5 and sqrt 5.
  Matrix m(2, 2);
  m << 3, 0, 4, 5;
  EXPECT_NEAR(operator_norm(LinearMap::dense(m)), 3.0 * std::sqrt(5.0), 1e-13);
  Vector d(2);
  d << -4.0, 2.0;
  EXPECT_NEAR(operator_norm(SelfAdjointOperator::diagonal(d)), 4.0, 1e-14);
}

TEST(Classify, ThresholdsAreRelative) {
  EXPECT_EQ(classify(1e-3, 1.0), Definiteness::strict_pd);
  EXPECT_EQ(classify(1e-12, 1.0), Definiteness::psd);
  EXPECT_EQ(classify(-1e-12, 1.0), Definiteness::psd);
  EXPECT_EQ(classify(-1e-6, 1.0), Definiteness::indefinite);
  // Relative to lambda_max: 1e-6 is round-off next to 1e6.
  EXPECT_EQ(classify(1e-6, 1e6), Definiteness::psd);
}
