#include "aggucb/embedding.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

namespace aggucb {
namespace {

TEST(ArmContext, ValidatesUnitNorm) {
  EXPECT_NO_THROW((ArmContext{Vector::Unit(3, 1), 0, 0}.validate()));
  EXPECT_THROW((ArmContext{Vector::Constant(3, 1.0), 0, 0}.validate()), std::invalid_argument);
  EXPECT_THROW((ArmContext{Vector(), 0, 0}.validate()), std::invalid_argument);
}

TEST(UnitNormalize, ScalesAndRejectsZero) {
  const Vector v = unit_normalize(Vector::Constant(4, 2.0));
  EXPECT_NEAR(v.norm(), 1.0, 1e-15);
  EXPECT_THROW(unit_normalize(Vector::Zero(3)), std::invalid_argument);
}

TEST(Embed, TwoGroupExample) {
  const EmbeddedArm e(ArmContext{Vector::Unit(2, 0), 0, 0}, 2);
  Matrix expect(2, 4);
  expect << 1, 0, 0, 0, 0, 0, 1, 0;
  EXPECT_EQ(e.materialize(), expect);
  EXPECT_EQ(e.rows(), 2);
  EXPECT_EQ(e.cols(), 4);
}

TEST(Embed, SingleGroupIsTheContextRow) {
  std::mt19937_64 rng(1);
  const Vector x = testing::random_unit(5, rng);
  const EmbeddedArm e(ArmContext{x, 0, 0}, 1);
  EXPECT_EQ(e.materialize(), Matrix(x.transpose()));
}

TEST(Embed, IndependentOfGroupTag) {
  std::mt19937_64 rng(2);
  const Vector x = testing::random_unit(3, rng);
  EXPECT_EQ(embed(ArmContext{x, 0, 0}, 4).materialize(), embed(ArmContext{x, 3, 0}, 4).materialize());
}

TEST(Embed, RowsHaveOneBlockOfNonzeros) {
  std::mt19937_64 rng(3);
  const Vector x = testing::random_unit(4, rng);
  const EmbeddedArm e(ArmContext{x, 1, 0}, 3);
  for (int r = 0; r < 3; ++r) {
    const Vector row = e.row(r);
    EXPECT_EQ((row.array() != 0.0).count(), 4);
    EXPECT_EQ(row.segment(4 * r, 4), x);
  }
  EXPECT_THROW(e.row(3), std::out_of_range);
}

TEST(MultiplyRight, MatchesDenseOracle) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const EmbeddedArm e(ArmContext{testing::random_unit(4, rng), 0, 0}, 3);
    Matrix theta(12, 7);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta.data()[i] = testing::random_vector(1, rng)[0];
    EXPECT_LE((e.multiply_right(theta) - e.materialize() * theta).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MultiplyRight, IdentityBlocksReproduceFeatures) {
  std::mt19937_64 rng(5);
  const Vector x = testing::random_unit(3, rng);
  const EmbeddedArm e(ArmContext{x, 0, 0}, 2);
  Matrix theta(6, 3);
  theta << Matrix::Identity(3, 3), Matrix::Identity(3, 3);
  const Matrix out = e.multiply_right(theta);
  for (int r = 0; r < 2; ++r) EXPECT_EQ(Vector(out.row(r).transpose()), x);
  EXPECT_TRUE(e.multiply_right(Matrix::Zero(6, 3)).isZero(0.0));
}

TEST(MultiplyRight, ShapeMismatchThrows) {
  const EmbeddedArm e(ArmContext{Vector::Unit(2, 0), 0, 0}, 2);
  EXPECT_THROW(e.multiply_right(Matrix::Zero(3, 2)), ShapeError);
}

}  // namespace
}  // namespace aggucb
