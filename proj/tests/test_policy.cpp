#include "aggucb/policy.hpp"

#include "aggucb/synthetic_env.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

namespace aggucb {
namespace {

AgentConfig small_config() {
  AgentConfig cfg;
  cfg.width = 8;
  cfg.depth = 2;
  cfg.gamma = 0.1;
  cfg.train = TrainConfig{1e-2, 5, false};
  return cfg;
}

std::vector<ArmContext> candidates(int n_groups, int dim, std::mt19937_64& rng) {
  std::vector<ArmContext> out;
  for (int c = 0; c < n_groups; ++c) out.push_back(ArmContext{testing::random_unit(dim, rng), c, c});
  return out;
}

TEST(ArgmaxLowest, TiesGoToLowestIndex) {
  const std::vector<double> s{1.0, 3.0, 3.0, 2.0};
  EXPECT_EQ(argmax_lowest(s), 1u);
  EXPECT_THROW(argmax_lowest(std::vector<double>{}), std::invalid_argument);
}

TEST(AgentConfig, Validation) {
  AgentConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.lambda = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.k_hop = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.train_every = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

class AllPolicies : public ::testing::TestWithParam<std::string> {};

TEST_P(AllPolicies, SingleCandidateIsChosen) {
  std::mt19937_64 rng(1);
  auto policy = make_policy(GetParam(), small_config(), 3, 2, 1);
  const std::vector<ArmContext> one{ArmContext{testing::random_unit(3, rng), 1, 42}};
  policy->reveal_expected_rewards(std::vector<double>{0.5});
  const auto d = policy->step(one);
  EXPECT_EQ(d.chosen_index, 0u);
  EXPECT_EQ(d.chosen.arm_id, 42);
}

TEST_P(AllPolicies, EmptyCandidatesThrow) {
  auto policy = make_policy(GetParam(), small_config(), 3, 2, 1);
  EXPECT_THROW(policy->step({}), std::invalid_argument);
}

TEST_P(AllPolicies, IdenticalCandidatesPickIndexZero) {
  std::mt19937_64 rng(2);
  auto policy = make_policy(GetParam(), small_config(), 3, 2, 1);
  const ArmContext a{testing::random_unit(3, rng), 1, 0};
  const std::vector<ArmContext> twins{a, a};
  policy->reveal_expected_rewards(std::vector<double>{0.3, 0.3});
  EXPECT_EQ(policy->step(twins).chosen_index, 0u);
}

TEST_P(AllPolicies, StepIsPureAndUpdateAdvancesGeneration) {
  std::mt19937_64 rng(3);
  auto policy = make_policy(GetParam(), small_config(), 3, 3, 4);
  const auto cands = candidates(3, 3, rng);
  const std::vector<double> expected{0.1, 0.9, 0.4};
  policy->reveal_expected_rewards(expected);
  const auto a = policy->step(cands);
  const auto b = policy->step(cands);
  EXPECT_EQ(a.chosen_index, b.chosen_index);
  EXPECT_EQ(a.score, b.score);
  EXPECT_EQ(a.generation, 0u);
  policy->update(a, 0.5);
  EXPECT_EQ(policy->generation(), 1u);
  EXPECT_THROW(policy->update(a, 0.5), std::logic_error);
}

TEST_P(AllPolicies, ChosenMaximizesScore) {
  std::mt19937_64 rng(4);
  auto policy = make_policy(GetParam(), small_config(), 4, 5, 2);
  for (int t = 0; t < 5; ++t) {
    const auto cands = candidates(5, 4, rng);
    std::vector<double> expected;
    for (int i = 0; i < 5; ++i) expected.push_back(0.1 * i * ((t + i) % 3));
    policy->reveal_expected_rewards(expected);
    const auto d = policy->step(cands);
    for (const auto& s : d.scores) EXPECT_LE(s.score, d.score);
    EXPECT_EQ(d.scores.size(), 5u);
    EXPECT_EQ(d.candidates.size(), 5u);
    policy->update(d, 0.3);
  }
}

TEST_P(AllPolicies, MultiGroupArmScoredPerGroup) {
  std::mt19937_64 rng(5);
  auto policy = make_policy(GetParam(), small_config(), 3, 3, 6);
  const Vector x = testing::random_unit(3, rng);
  const std::vector<ArmContext> cands{ArmContext{x, 0, 9}, ArmContext{x, 2, 9}};
  policy->reveal_expected_rewards(std::vector<double>{0.2, 0.4});
  const auto d = policy->step(cands);
  EXPECT_EQ(d.scores.size(), 2u);
  if (GetParam() == "agg_ucb" || GetParam() == "neural_ind") EXPECT_NE(d.scores[0].point, d.scores[1].point);
}

INSTANTIATE_TEST_SUITE_P(Names, AllPolicies,
                         ::testing::Values("agg_ucb", "neural_pool", "neural_ind", "lin_ucb", "oracle"));

TEST(MakePolicy, UnknownNameThrows) {
  EXPECT_THROW(make_policy("kernel_ucb", small_config(), 2, 2, 0), std::invalid_argument);
}

TEST(NeuralUcb, GammaZeroIsGreedy) {
  std::mt19937_64 rng(6);
  AgentConfig cfg = small_config();
  cfg.gamma = 0.0;
  for (const char* name : {"agg_ucb", "neural_pool"}) {
    auto policy = make_policy(name, cfg, 3, 4, 3);
    const auto d = policy->step(candidates(4, 3, rng));
    for (const auto& s : d.scores) EXPECT_LE(s.point, d.point);
    EXPECT_EQ(d.score, d.point);
  }
}

TEST(NeuralUcb, ScoreIsPointPlusGammaWidth) {
  std::mt19937_64 rng(7);
  AgentConfig cfg = small_config();
  cfg.gamma = 0.37;
  auto policy = make_agg_ucb(cfg, 3, 3, 1);
  const auto d = policy->step(candidates(3, 3, rng));
  for (const auto& s : d.scores) EXPECT_DOUBLE_EQ(s.score, s.point + 0.37 * s.width);
}

TEST(NeuralUcb, UpdateShrinksChosenWidthAndGrowsBuffer) {
  std::mt19937_64 rng(8);
  auto policy = make_agg_ucb(small_config(), 3, 3, 2);
  for (int t = 0; t < 4; ++t) {
    const auto d = policy->step(candidates(3, 3, rng));
    const std::size_t before = policy->buffer().size();
    const double w = policy->confidence().width(d.gradient);
    policy->update(d, 0.5);
    EXPECT_EQ(policy->buffer().size(), before + 1);
    EXPECT_LT(policy->confidence().width(d.gradient), w);
  }
}

TEST(NeuralUcb, GraphIngestsAllCandidatesOrOnlyChosen) {
  std::mt19937_64 rng(9);
  for (bool all : {true, false}) {
    AgentConfig cfg = small_config();
    cfg.ingest_all_candidates = all;
    auto policy = make_agg_ucb(cfg, 3, 3, 2);
    const auto d = policy->step(candidates(3, 3, rng));
    policy->update(d, 0.5);
    const auto& model = dynamic_cast<const GraphRewardModel&>(policy->model());
    std::size_t total = 0;
    for (int c = 0; c < 3; ++c) total += model.graph().count(c);
    EXPECT_EQ(total, all ? 3u : 1u);
  }
}

TEST(NeuralUcb, ColdStartRetrainsFromInitialParams) {
  std::mt19937_64 rng(10);
  AgentConfig cfg = small_config();
  cfg.train.steps = 0;
  auto policy = make_neural_pool(cfg, 3, 2, 5);
  const auto d = policy->step(candidates(2, 3, rng));
  policy->update(d, 1.0);
  EXPECT_EQ(policy->params(), policy->initial_params());
}

TEST(NeuralUcb, TrainEverySkipsRounds) {
  std::mt19937_64 rng(11);
  AgentConfig cfg = small_config();
  cfg.train_every = 3;
  auto policy = make_neural_pool(cfg, 3, 2, 5);
  std::vector<std::size_t> rounds;
  policy->set_train_curve([&](std::size_t r, int s, double) {
    if (s == 0) rounds.push_back(r);
  });
  for (int t = 0; t < 7; ++t) policy->update(policy->step(candidates(2, 3, rng)), 0.5);
  EXPECT_EQ(rounds, (std::vector<std::size_t>{3, 6}));
}

TEST(NeuralUcb, DeterministicPerSeed) {
  const auto run = [] {
    std::mt19937_64 rng(12);
    auto policy = make_agg_ucb(small_config(), 3, 3, 77);
    std::vector<std::size_t> picks;
    for (int t = 0; t < 6; ++t) {
      const auto d = policy->step(candidates(3, 3, rng));
      picks.push_back(d.chosen_index);
      policy->update(d, 0.1 * static_cast<double>(t));
    }
    return std::make_pair(picks, policy->params());
  };
  EXPECT_EQ(run(), run());
}

TEST(NeuralUcb, IndOnSingleGroupEqualsPool) {
  std::mt19937_64 rng(13);
  auto pool = make_neural_pool(small_config(), 4, 1, 9);
  auto ind = make_neural_ind(small_config(), 4, 1, 9);
  for (int t = 0; t < 4; ++t) {
    const auto cands = candidates(1, 4, rng);
    const std::vector<ArmContext> two{cands[0], ArmContext{testing::random_unit(4, rng), 0, 1}};
    const auto a = pool->step(two), b = ind->step(two);
    ASSERT_EQ(a.scores.size(), b.scores.size());
    for (std::size_t i = 0; i < a.scores.size(); ++i) {
      EXPECT_EQ(a.scores[i].point, b.scores[i].point);
      EXPECT_EQ(a.scores[i].width, b.scores[i].width);
    }
    pool->update(a, 0.4);
    ind->update(b, 0.4);
  }
}

TEST(NeuralUcb, ConstantShiftDoesNotChangeArgmax) {
  // Shifting the output bias shifts every point estimate equally.
  std::mt19937_64 rng(14);
  auto policy = make_neural_pool(small_config(), 3, 2, 3);
  const auto cands = candidates(2, 3, rng);
  const auto d = policy->step(cands);
  std::vector<double> shifted;
  for (const auto& s : d.scores) shifted.push_back(s.score + 5.0);
  EXPECT_EQ(argmax_lowest(shifted), d.chosen_index);
}

TEST(NeuralUcb, RejectsForeignGroups) {
  auto policy = make_agg_ucb(small_config(), 3, 2, 1);
  const std::vector<ArmContext> bad{ArmContext{Vector::Unit(3, 0), 5, 0}};
  EXPECT_THROW(policy->step(bad), std::out_of_range);
  const std::vector<ArmContext> wrong_dim{ArmContext{Vector::Unit(2, 0), 0, 0}};
  EXPECT_THROW(policy->step(wrong_dim), ShapeError);
}

TEST(LinUcb, LearnsLinearRewards) {
  SyntheticEnvConfig cfg = make_clustered_config(3, 4, 3, 0.8, 0.0, RewardFn::Linear, 0.05, 3);
  SyntheticEnv env(cfg, 1);
  LinUcbPolicy policy(4, 3, 0.5, 1.0);
  std::vector<double> regret;
  for (int t = 0; t < 2000; ++t) {
    const auto round = env.next_round();
    const auto d = policy.step(round.candidates);
    regret.push_back(round.best_expected() - round.expected[d.chosen_index]);
    policy.update(d, env.observe(round, d.chosen_index));
  }
  const auto mean = [&](std::size_t a, std::size_t b) {
    double s = 0.0;
    for (std::size_t i = a; i < b; ++i) s += regret[i];
    return s / static_cast<double>(b - a);
  };
  EXPECT_LT(mean(1500, 2000), mean(0, 500));
}

TEST(Oracle, NeedsExpectedRewards) {
  OraclePolicy oracle;
  const std::vector<ArmContext> c{ArmContext{Vector::Unit(2, 0), 0, 0}};
  EXPECT_THROW(oracle.step(c), std::logic_error);
}

}  // namespace
}  // namespace aggucb
