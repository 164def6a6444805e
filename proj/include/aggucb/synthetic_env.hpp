#pragma once

#include "aggucb/environment.hpp"

#include <random>

namespace aggucb {

enum class RewardFn { Linear, Cosine, Quadratic };

std::string to_string(RewardFn f);
RewardFn parse_reward_fn(std::string_view name);

/// h(theta, x) for unit theta and x; always in [0, 1].
///   linear     |theta^T x|
///   cosine     (1 + cos(3 pi theta^T x)) / 2
///   quadratic  (theta^T x)^2
double reward_value(RewardFn f, double inner);

struct SyntheticEnvConfig {
  int n_groups = 0;
  int d_x = 0;
  int arms_per_round = 0;  ///< 0 means one arm per group
  Matrix group_centers;    ///< n_groups x d_x, unit rows
  Vector group_spread;     ///< per-group std of the Gaussian perturbation
  Matrix base_directions;  ///< n_groups x d_x, unit rows
  Matrix group_mixing;     ///< n_groups x n_groups, row-stochastic
  RewardFn reward_fn = RewardFn::Cosine;
  double noise_sigma = 0.0;

  void validate() const;
  int arms() const noexcept { return arms_per_round > 0 ? arms_per_round : n_groups; }
};

/// Groups split round-robin into `n_clusters` clusters. Groups in one cluster
/// share a context center; `coupling` in [0,1] blends each group's base
/// direction with its cluster's average (1 = identical reward parameters).
SyntheticEnvConfig make_clustered_config(int n_groups, int d_x, int n_clusters, double spread,
                                         double coupling, RewardFn reward_fn, double noise_sigma,
                                         std::uint64_t seed);

class SyntheticEnv : public Environment {
 public:
  SyntheticEnv(SyntheticEnvConfig cfg, std::uint64_t seed);

  std::string_view name() const override { return "synthetic"; }
  int context_dim() const override { return cfg_.d_x; }
  int n_groups() const override { return cfg_.n_groups; }

  EnvRound next_round() override;
  double observe(const EnvRound& round, std::size_t chosen) override;

  const SyntheticEnvConfig& config() const noexcept { return cfg_; }
  /// Unit reward parameter of group c.
  const Vector& theta(int c) const { return theta_.at(static_cast<std::size_t>(c)); }
  double expected_reward(int group, const Vector& x) const;
  /// One context drawn from group c's distribution.
  Vector sample_context(int c, std::mt19937_64& rng) const;

 private:
  SyntheticEnvConfig cfg_;
  std::vector<Vector> theta_;
  std::mt19937_64 rng_;
  std::int64_t next_arm_id_ = 0;
};

/// Draws one round from `env` using `rng` (the env's own stream is untouched).
EnvRound synthetic_round(const SyntheticEnv& env, std::mt19937_64& rng);

}  // namespace aggucb
