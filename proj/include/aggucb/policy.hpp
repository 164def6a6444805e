#pragma once

// Bandit policies sharing one step/update interface:
//   agg_ucb      group-aware GNN scorer with gradient UCB (the main algorithm)
//   neural_pool  one FC network on the raw context, gradient UCB
//   neural_ind   one FC network on the group-embedded row, gradient UCB
//   lin_ucb      disjoint per-group ridge regression
//   oracle       follows the environment's expected rewards (testing aid)
//
// step() is const and never mutates the policy; update() applies a decision
// produced by the same policy generation.

#include "aggucb/common.hpp"
#include "aggucb/confidence.hpp"
#include "aggucb/embedding.hpp"
#include "aggucb/graph_model.hpp"
#include "aggucb/network.hpp"
#include "aggucb/trainer.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aggucb {

struct AgentConfig {
  double gamma = 0.1;    ///< exploration weight
  double lambda = 1.0;   ///< Z_0 = lambda I
  int width = 32;        ///< m
  int depth = 2;         ///< L
  int k_hop = 1;         ///< power of the normalized adjacency
  Activation activation = Activation::Tanh;
  KernelConfig kernel;
  TrainConfig train;
  /// Exact or diagonal confidence; unset picks by parameter count.
  std::optional<ConfidenceMode> mode;
  /// Retrain after every `train_every`-th round.
  int train_every = 1;
  /// Ingest every offered context into the graph (true) or only the played one.
  bool ingest_all_candidates = true;

  void validate() const;
};

struct CandidateScore {
  double point = 0.0;
  double width = 0.0;
  double score = 0.0;
};

struct RoundDecision {
  std::size_t chosen_index = 0;
  ArmContext chosen;
  double score = 0.0;
  double point = 0.0;
  double width = 0.0;
  std::vector<ArmContext> candidates;
  std::vector<CandidateScore> scores;
  /// Gradient of the chosen arm at the selection-time parameters (neural
  /// policies only).
  Vector gradient;
  std::uint64_t generation = 0;
};

/// Index of the largest score; ties go to the lowest index.
std::size_t argmax_lowest(std::span<const double> scores);

class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string_view name() const = 0;
  virtual RoundDecision step(std::span<const ArmContext> candidates) const = 0;
  virtual void update(const RoundDecision& decision, double reward) = 0;

  /// Training loss reported after the most recent update (0 if none).
  virtual double last_loss() const noexcept { return 0.0; }
  /// Only the oracle policy uses this; others ignore it.
  virtual void reveal_expected_rewards(std::span<const double>) {}

  std::uint64_t generation() const noexcept { return generation_; }

 protected:
  void check_decision(const RoundDecision& d) const;
  std::uint64_t generation_ = 0;
};

/// A differentiable reward model driven by a gradient-UCB policy.
class RewardModel {
 public:
  virtual ~RewardModel() = default;
  virtual std::size_t param_count() const = 0;
  virtual Vector initial_params(std::uint64_t seed) const = 0;
  /// Value at `params`; writes the gradient when `grad` is non-empty.
  virtual double evaluate(std::span<const double> params, const ArmContext& ctx,
                          std::span<double> grad) const = 0;
  virtual void check_context(const ArmContext& ctx) const = 0;
  /// Called at the start of update() with the round's candidates and the
  /// played arm.
  virtual void observe(std::span<const ArmContext> candidates, const ArmContext& chosen) {
    (void)candidates;
    (void)chosen;
  }
};

/// FC model on the raw context (pool) or on the group-embedded row (ind).
class MlpRewardModel : public RewardModel {
 public:
  enum class Input { Raw, EmbeddedRow };

  MlpRewardModel(Input input, int context_dim, int n_groups, int width, int depth, Activation act);

  std::size_t param_count() const override { return shape_.param_count(); }
  Vector initial_params(std::uint64_t seed) const override;
  double evaluate(std::span<const double> params, const ArmContext& ctx,
                  std::span<double> grad) const override;
  void check_context(const ArmContext& ctx) const override;
  const MlpShape& shape() const noexcept { return shape_; }

 private:
  Input input_;
  int context_dim_;
  int n_groups_;
  MlpShape shape_;
};

/// The group-aware network over the estimated arm-group graph.
class GraphRewardModel : public RewardModel {
 public:
  GraphRewardModel(const NetworkShape& shape, int k_hop, KernelConfig kernel, bool ingest_all);

  std::size_t param_count() const override { return shape_.param_count(); }
  Vector initial_params(std::uint64_t seed) const override;
  double evaluate(std::span<const double> params, const ArmContext& ctx,
                  std::span<double> grad) const override;
  void check_context(const ArmContext& ctx) const override;
  void observe(std::span<const ArmContext> candidates, const ArmContext& chosen) override;

  const ArmGroupGraph& graph() const noexcept { return graph_; }
  const NormalizedAdjacency& adjacency() const noexcept { return adjacency_; }
  const NetworkShape& shape() const noexcept { return shape_; }

 private:
  NetworkShape shape_;
  int k_hop_;
  bool ingest_all_;
  ArmGroupGraph graph_;
  NormalizedAdjacency adjacency_;
};

/// Gradient-UCB agent: score = f(x; Theta) + gamma * sqrt(g^T Z^-1 g / m),
/// retrained by full-batch gradient descent on the replay buffer.
class NeuralUcbPolicy : public Policy {
 public:
  NeuralUcbPolicy(std::string name, std::unique_ptr<RewardModel> model, const AgentConfig& cfg,
                  std::uint64_t seed);

  std::string_view name() const override { return name_; }
  RoundDecision step(std::span<const ArmContext> candidates) const override;
  void update(const RoundDecision& decision, double reward) override;
  double last_loss() const noexcept override { return last_loss_; }

  const RewardModel& model() const noexcept { return *model_; }
  const Vector& params() const noexcept { return params_; }
  const Vector& initial_params() const noexcept { return theta0_; }
  const ConfidenceState& confidence() const noexcept { return confidence_; }
  const ReplayBuffer& buffer() const noexcept { return buffer_; }
  const AgentConfig& config() const noexcept { return cfg_; }

  /// Optional sink for per-step training losses: (round, step, loss).
  void set_train_curve(std::function<void(std::size_t, int, double)> sink) { curve_ = std::move(sink); }

 private:
  std::string name_;
  std::unique_ptr<RewardModel> model_;
  AgentConfig cfg_;
  Vector theta0_;
  Vector params_;
  ConfidenceState confidence_;
  ReplayBuffer buffer_;
  double last_loss_ = 0.0;
  std::function<void(std::size_t, int, double)> curve_;
};

/// Disjoint LinUCB: per-group A_c = lambda I + sum x x^T, b_c = sum r x,
/// score = x^T A_c^-1 b_c + gamma * sqrt(x^T A_c^-1 x).
class LinUcbPolicy : public Policy {
 public:
  LinUcbPolicy(int context_dim, int n_groups, double gamma, double lambda);

  std::string_view name() const override { return "lin_ucb"; }
  RoundDecision step(std::span<const ArmContext> candidates) const override;
  void update(const RoundDecision& decision, double reward) override;

 private:
  int dim_;
  int n_groups_;
  double gamma_;
  std::vector<Matrix> a_inv_;
  std::vector<Vector> b_;
};

/// Picks the arm with the highest revealed expected reward.
class OraclePolicy : public Policy {
 public:
  std::string_view name() const override { return "oracle"; }
  RoundDecision step(std::span<const ArmContext> candidates) const override;
  void update(const RoundDecision& decision, double reward) override;
  void reveal_expected_rewards(std::span<const double> expected) override {
    expected_.assign(expected.begin(), expected.end());
  }

 private:
  std::vector<double> expected_;
};

std::unique_ptr<NeuralUcbPolicy> make_agg_ucb(const AgentConfig& cfg, int context_dim, int n_groups,
                                              std::uint64_t seed);
std::unique_ptr<NeuralUcbPolicy> make_neural_pool(const AgentConfig& cfg, int context_dim,
                                                  int n_groups, std::uint64_t seed);
std::unique_ptr<NeuralUcbPolicy> make_neural_ind(const AgentConfig& cfg, int context_dim,
                                                 int n_groups, std::uint64_t seed);

/// Builds a policy by name: agg_ucb, neural_pool, neural_ind, lin_ucb, oracle.
std::unique_ptr<Policy> make_policy(std::string_view algo, const AgentConfig& cfg, int context_dim,
                                    int n_groups, std::uint64_t seed);

}  // namespace aggucb
