#include "aggucb/confidence.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace aggucb {
namespace {

TEST(Confidence, ModeParsingAndDefault) {
  EXPECT_EQ(parse_confidence_mode("exact"), ConfidenceMode::Exact);
  EXPECT_EQ(parse_confidence_mode("diagonal"), ConfidenceMode::Diagonal);
  EXPECT_THROW(parse_confidence_mode("sketch"), std::invalid_argument);
  EXPECT_EQ(default_confidence_mode(20000), ConfidenceMode::Exact);
  EXPECT_EQ(default_confidence_mode(20001), ConfidenceMode::Diagonal);
}

TEST(Confidence, RejectsBadConstruction) {
  EXPECT_THROW(ConfidenceState(0, 1.0, 4, ConfidenceMode::Exact), std::invalid_argument);
  EXPECT_THROW(ConfidenceState(3, 0.0, 4, ConfidenceMode::Exact), std::invalid_argument);
  EXPECT_THROW(ConfidenceState(3, 1.0, 0, ConfidenceMode::Exact), std::invalid_argument);
}

class ConfidenceModes : public ::testing::TestWithParam<ConfidenceMode> {};

TEST_P(ConfidenceModes, InitialWidthOfUnitVector) {
  const int m = 7;
  ConfidenceState c(4, 1.0, m, GetParam());
  EXPECT_NEAR(c.width(Vector::Unit(4, 0)), std::sqrt(1.0 / m), 1e-15);
  EXPECT_EQ(c.width(Vector::Zero(4)), 0.0);
}

TEST_P(ConfidenceModes, WidthIsPositivelyHomogeneous) {
  std::mt19937_64 rng(1);
  ConfidenceState c(6, 0.5, 3, GetParam());
  for (int i = 0; i < 5; ++i) c.update(testing::random_vector(6, rng));
  const Vector g = testing::random_vector(6, rng);
  EXPECT_NEAR(c.width(Vector(3.5 * g)), 3.5 * c.width(g), 1e-12);
}

TEST_P(ConfidenceModes, HandInvertedTwoByTwo) {
  const int m = 5;
  ConfidenceState c(2, 1.0, m, GetParam());
  c.update(Vector::Unit(2, 0));
  EXPECT_NEAR(c.width(Vector::Unit(2, 0)), std::sqrt(0.5 / m), 1e-15);
}

TEST_P(ConfidenceModes, OrthogonalUpdateLeavesWidth) {
  ConfidenceState c(3, 1.0, 2, GetParam());
  c.update(Vector::Unit(3, 1));
  EXPECT_NEAR(c.width(Vector::Unit(3, 0)), std::sqrt(0.5), 1e-15);
}

TEST_P(ConfidenceModes, ZeroUpdateIsNoOp) {
  std::mt19937_64 rng(2);
  ConfidenceState c(5, 1.0, 2, GetParam());
  c.update(testing::random_vector(5, rng));
  const Matrix before = c.inverse_dense();
  c.update(Vector::Zero(5));
  EXPECT_EQ(c.inverse_dense(), before);
}

TEST_P(ConfidenceModes, WidthOfUpdatedGradientDecreases) {
  std::mt19937_64 rng(3);
  ConfidenceState c(8, 1.0, 4, GetParam());
  for (int i = 0; i < 20; ++i) {
    const Vector g = testing::random_vector(8, rng);
    const double before = c.width(g);
    c.update(g);
    EXPECT_LT(c.width(g), before);
  }
}

TEST_P(ConfidenceModes, DimensionMismatchThrows) {
  ConfidenceState c(3, 1.0, 2, GetParam());
  EXPECT_THROW(c.width(Vector::Zero(2)), ShapeError);
  EXPECT_THROW(c.update(Vector::Zero(4)), ShapeError);
}

TEST_P(ConfidenceModes, BatchedWidthsMatchSingle) {
  std::mt19937_64 rng(4);
  ConfidenceState c(10, 2.0, 3, GetParam());
  for (int i = 0; i < 7; ++i) c.update(testing::random_vector(10, rng));
  RowMatrix g(4, 10);
  for (int r = 0; r < 4; ++r) g.row(r) = testing::random_vector(10, rng).transpose();
  const auto w = c.widths(g);
  ASSERT_EQ(w.size(), 4u);
  for (int r = 0; r < 4; ++r) EXPECT_NEAR(w[static_cast<std::size_t>(r)], c.width(Vector(g.row(r).transpose())), 1e-14);
}

INSTANTIATE_TEST_SUITE_P(AllModes, ConfidenceModes,
                         ::testing::Values(ConfidenceMode::Exact, ConfidenceMode::Diagonal),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(ConfidenceExact, MatchesDirectInverseAndSolve) {
  std::mt19937_64 rng(5);
  const std::size_t p = 50;
  const double lambda = 1.0;
  ConfidenceState c(p, lambda, 16, ConfidenceMode::Exact);
  Matrix z = lambda * Matrix::Identity(p, p);
  for (int i = 0; i < 200; ++i) {
    const Vector g = testing::random_vector(p, rng, 0.3);
    c.update(g);
    z += g * g.transpose();
  }
  EXPECT_EQ(c.updates(), 200u);
  const Matrix direct = z.inverse();
  EXPECT_LE((c.inverse_dense() - direct).cwiseAbs().maxCoeff(), 1e-8);

  const Vector g = testing::random_vector(p, rng);
  const Vector v = z.ldlt().solve(g);
  const double expect = std::sqrt(g.dot(v) / 16.0);
  EXPECT_NEAR(c.width(g), expect, 1e-8 * expect);

  const Matrix inv = c.inverse_dense();
  EXPECT_TRUE(inv.isApprox(inv.transpose(), 0.0));
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix>(inv).eigenvalues().minCoeff(), 0.0);
}

TEST(ConfidenceExact, WidthMonotoneOverUpdates) {
  std::mt19937_64 rng(6);
  ConfidenceState c(20, 1.0, 4, ConfidenceMode::Exact);
  const Vector probe = testing::random_vector(20, rng);
  double last = c.width(probe);
  for (int i = 0; i < 100; ++i) {
    c.update(testing::random_vector(20, rng));
    const double w = c.width(probe);
    EXPECT_LE(w, last * (1.0 + 1e-12));
    last = w;
  }
}

TEST(ConfidenceDiagonal, StoresDiagonalOfZ) {
  ConfidenceState c(3, 0.5, 1, ConfidenceMode::Diagonal);
  Vector g(3);
  g << 1.0, -2.0, 0.0;
  c.update(g);
  EXPECT_EQ(c.diagonal(), (std::vector<double>{1.5, 4.5, 0.5}));
  EXPECT_NEAR(c.width(Vector::Ones(3)), std::sqrt(1 / 1.5 + 1 / 4.5 + 1 / 0.5), 1e-15);
}

TEST(Confidence, ExactAndDiagonalAgreeOnAxisAlignedUpdates) {
  std::mt19937_64 rng(7);
  ConfidenceState e(6, 1.0, 3, ConfidenceMode::Exact), d(6, 1.0, 3, ConfidenceMode::Diagonal);
  std::uniform_int_distribution<int> axis(0, 5);
  std::normal_distribution<double> n;
  for (int i = 0; i < 30; ++i) {
    const Vector g = n(rng) * Vector::Unit(6, axis(rng));
    e.update(g);
    d.update(g);
  }
  for (int i = 0; i < 10; ++i) {
    const Vector g = testing::random_vector(6, rng);
    EXPECT_NEAR(e.width(g), d.width(g), 1e-12);
  }
}

}  // namespace
}  // namespace aggucb
