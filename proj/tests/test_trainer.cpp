#include "aggucb/trainer.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace aggucb {
namespace {

struct Fixture {
  NetworkShape shape{6, 2, 3, 3, Activation::Tanh};
  NormalizedAdjacency adj;
  NetworkParams params;
  ReplayBuffer buffer;

  explicit Fixture(std::uint64_t seed, int entries = 8) {
    std::mt19937_64 rng(seed);
    adj = testing::random_adjacency(3, 1, rng);
    params = init_params(shape, seed);
    std::uniform_real_distribution<double> r(0.0, 1.0);
    for (int i = 0; i < entries; ++i) buffer.append(ArmContext{testing::random_unit(3, rng), i % 3, i}, r(rng));
  }
};

TEST(TrainConfig, Validation) {
  EXPECT_THROW((TrainConfig{0.0, 1, false}.validate()), std::invalid_argument);
  EXPECT_THROW((TrainConfig{1e-3, -1, false}.validate()), std::invalid_argument);
  EXPECT_NO_THROW((TrainConfig{1e-3, 0, true}.validate()));
}

TEST(Loss, EmptyBufferIsZero) {
  Fixture f(1, 0);
  EXPECT_EQ(loss(f.params, f.buffer, f.adj), 0.0);
}

TEST(Loss, SingleEntryZeroModel) {
  Fixture f(2, 0);
  f.buffer.append(ArmContext{Vector::Unit(3, 0), 0, 0}, 1.0);
  const NetworkParams zero(f.shape, Vector::Zero(static_cast<Eigen::Index>(f.shape.param_count())));
  EXPECT_DOUBLE_EQ(loss(zero, f.buffer, f.adj), 0.5);
}

TEST(Loss, PerfectPredictionsGiveZero) {
  Fixture f(3, 0);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 4; ++i) {
    const Vector x = testing::random_unit(3, rng);
    f.buffer.append(ArmContext{x, i % 3, i}, value(f.adj, x, i % 3, f.params));
  }
  EXPECT_EQ(loss(f.params, f.buffer, f.adj), 0.0);
}

TEST(Loss, MatchesPerEntryOracle) {
  Fixture f(4, 40);
  double expect = 0.0;
  for (const auto& e : f.buffer.entries()) {
    const double r = forward(f.adj, EmbeddedArm(e.context, 3), e.context.group, f.params).value - e.reward;
    expect += 0.5 * r * r;
  }
  EXPECT_NEAR(loss(f.params, f.buffer, f.adj), expect, 1e-12);
}

TEST(Train, ZeroStepsOrTinyRateKeepsParams) {
  Fixture f(5);
  EXPECT_EQ(train(f.params, f.buffer, f.adj, TrainConfig{1e-3, 0, false}).flat(), f.params.flat());
  const auto r = train(f.params.flat(), f.buffer, network_model(f.shape, f.adj), TrainConfig{1e-3, 0, false});
  EXPECT_EQ(r.initial_loss, r.final_loss);
  // eta must be positive; the smallest representable rate leaves params unchanged.
  const NetworkParams q = train(f.params, f.buffer, f.adj, TrainConfig{1e-300, 3, false});
  EXPECT_EQ(q.flat(), f.params.flat());
}

TEST(Train, SingleStepMatchesHandComposition) {
  Fixture f(6, 0);
  std::mt19937_64 rng(6);
  const ArmContext ctx{testing::random_unit(3, rng), 2, 0};
  f.buffer.append(ctx, 0.7);
  const double eta = 0.05;
  const Vector g = gradient(f.adj, EmbeddedArm(ctx, 3), 2, f.params);
  const double res = value(f.adj, ctx.features, 2, f.params) - 0.7;
  const Vector expect = f.params.flat() - eta * res * g;
  const NetworkParams got = train(f.params, f.buffer, f.adj, TrainConfig{eta, 1, false});
  EXPECT_LE((got.flat() - expect).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Train, LossGradientIsSumOfResidualWeightedGradients) {
  Fixture f(7, 12);
  const double eta = 1e-2;
  Vector grad = Vector::Zero(static_cast<Eigen::Index>(f.shape.param_count()));
  for (const auto& e : f.buffer.entries()) {
    const EmbeddedArm arm(e.context, 3);
    grad += (value(f.adj, e.context.features, e.context.group, f.params) - e.reward) *
            gradient(f.adj, arm, e.context.group, f.params);
  }
  const NetworkParams got = train(f.params, f.buffer, f.adj, TrainConfig{eta, 1, false});
  EXPECT_LE(((f.params.flat() - got.flat()) / eta - grad).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Train, CurveReportsEveryStepAndFinalLoss) {
  Fixture f(8);
  std::vector<std::pair<int, double>> curve;
  const auto r = train(f.params.flat(), f.buffer, network_model(f.shape, f.adj), TrainConfig{1e-2, 5, false},
                       [&](int s, double l) { curve.emplace_back(s, l); });
  ASSERT_EQ(curve.size(), 6u);
  EXPECT_EQ(curve.front().second, r.initial_loss);
  EXPECT_EQ(curve.back().first, 5);
  EXPECT_EQ(curve.back().second, r.final_loss);
  EXPECT_LT(r.final_loss, r.initial_loss);
}

TEST(Train, DivergenceNamesTheStep) {
  Fixture f(9);
  try {
    train(f.params, f.buffer, f.adj, TrainConfig{1e6, 50, false});
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_GE(e.step(), 1);
    EXPECT_LE(e.step(), 50);
  }
}

TEST(Train, NonFiniteModelDiverges) {
  Fixture f(10);
  const ModelFn bad = [](std::span<const double>, const ArmContext&, std::span<double> g) {
    for (double& v : g) v = 0.0;
    return std::nan("");
  };
  try {
    train(f.params.flat(), f.buffer, bad, TrainConfig{1e-3, 3, false});
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 0);
  }
}

TEST(Train, ModelExceptionsPropagate) {
  Fixture f(11, 100);
  const ModelFn bad = [](std::span<const double>, const ArmContext& c, std::span<double>) -> double {
    if (c.arm_id == 77) throw std::runtime_error("boom");
    return 0.0;
  };
  EXPECT_THROW(train(f.params.flat(), f.buffer, bad, TrainConfig{1e-3, 1, false}), std::runtime_error);
  EXPECT_THROW(loss(std::span<const double>(f.params.flat().data(), f.params.size()), f.buffer, bad),
               std::runtime_error);
}

}  // namespace
}  // namespace aggucb
