#include "aggucb/synthetic_env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace aggucb {

double EnvRound::best_expected() const {
  if (expected.empty()) throw std::logic_error("round has no candidates");
  return *std::max_element(expected.begin(), expected.end());
}

std::string to_string(RewardFn f) {
  switch (f) {
    case RewardFn::Linear: return "linear";
    case RewardFn::Cosine: return "cosine";
    case RewardFn::Quadratic: return "quadratic";
  }
  return "unknown";
}

RewardFn parse_reward_fn(std::string_view name) {
  if (name == "linear") return RewardFn::Linear;
  if (name == "cosine") return RewardFn::Cosine;
  if (name == "quadratic") return RewardFn::Quadratic;
  throw std::invalid_argument("unknown reward function '" + std::string(name) + "'");
}

double reward_value(RewardFn f, double inner) {
  inner = std::clamp(inner, -1.0, 1.0);
  switch (f) {
    case RewardFn::Linear: return std::abs(inner);
    case RewardFn::Cosine: return 0.5 * (1.0 + std::cos(3.0 * std::numbers::pi * inner));
    case RewardFn::Quadratic: return inner * inner;
  }
  return 0.0;
}

void SyntheticEnvConfig::validate() const {
  if (n_groups < 1 || d_x < 1) throw std::invalid_argument("SyntheticEnvConfig: bad dimensions");
  if (arms_per_round < 0) throw std::invalid_argument("SyntheticEnvConfig: arms_per_round must be >= 0");
  if (group_centers.rows() != n_groups || group_centers.cols() != d_x)
    throw ShapeError("SyntheticEnvConfig: group_centers must be n_groups x d_x");
  if (base_directions.rows() != n_groups || base_directions.cols() != d_x)
    throw ShapeError("SyntheticEnvConfig: base_directions must be n_groups x d_x");
  if (group_spread.size() != n_groups) throw ShapeError("SyntheticEnvConfig: group_spread must have n_groups entries");
  if (group_mixing.rows() != n_groups || group_mixing.cols() != n_groups)
    throw ShapeError("SyntheticEnvConfig: group_mixing must be n_groups x n_groups");
  for (int c = 0; c < n_groups; ++c) {
    if (std::abs(group_centers.row(c).norm() - 1.0) > 1e-9)
      throw std::invalid_argument("SyntheticEnvConfig: group centers must be unit vectors");
    if (std::abs(base_directions.row(c).norm() - 1.0) > 1e-9)
      throw std::invalid_argument("SyntheticEnvConfig: base directions must be unit vectors");
    if (!(group_spread[c] >= 0.0)) throw std::invalid_argument("SyntheticEnvConfig: spread must be >= 0");
    if ((group_mixing.row(c).array() < 0.0).any() || std::abs(group_mixing.row(c).sum() - 1.0) > 1e-9)
      throw std::invalid_argument("SyntheticEnvConfig: group_mixing must be row-stochastic");
  }
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("SyntheticEnvConfig: noise_sigma must be >= 0");
}

namespace {

Vector random_unit(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = normal(rng);
  return unit_normalize(v);
}

}  // namespace

SyntheticEnvConfig make_clustered_config(int n_groups, int d_x, int n_clusters, double spread,
                                         double coupling, RewardFn reward_fn, double noise_sigma,
                                         std::uint64_t seed) {
  if (n_clusters < 1 || n_clusters > n_groups) throw std::invalid_argument("n_clusters must be in [1, n_groups]");
  if (!(coupling >= 0.0 && coupling <= 1.0)) throw std::invalid_argument("coupling must be in [0, 1]");
  std::mt19937_64 rng(seed);
  SyntheticEnvConfig cfg;
  cfg.n_groups = n_groups;
  cfg.d_x = d_x;
  cfg.reward_fn = reward_fn;
  cfg.noise_sigma = noise_sigma;
  cfg.group_spread = Vector::Constant(n_groups, spread);
  cfg.group_centers.resize(n_groups, d_x);
  cfg.base_directions.resize(n_groups, d_x);
  cfg.group_mixing = Matrix::Zero(n_groups, n_groups);

  std::vector<Vector> centers;
  for (int k = 0; k < n_clusters; ++k) centers.push_back(random_unit(d_x, rng));
  for (int c = 0; c < n_groups; ++c) {
    cfg.group_centers.row(c) = centers[static_cast<std::size_t>(c % n_clusters)].transpose();
    cfg.base_directions.row(c) = random_unit(d_x, rng).transpose();
  }
  for (int c = 0; c < n_groups; ++c) {
    const int k = c % n_clusters;
    int members = 0;
    for (int j = k; j < n_groups; j += n_clusters) ++members;
    for (int j = k; j < n_groups; j += n_clusters) cfg.group_mixing(c, j) += coupling / members;
    cfg.group_mixing(c, c) += 1.0 - coupling;
  }
  return cfg;
}

SyntheticEnv::SyntheticEnv(SyntheticEnvConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {
  cfg_.validate();
  for (int c = 0; c < cfg_.n_groups; ++c) {
    Vector mixed = (cfg_.group_mixing.row(c) * cfg_.base_directions).transpose();
    if (mixed.norm() < 1e-12) throw std::invalid_argument("group mixing cancels the base directions of group " + std::to_string(c));
    theta_.push_back(mixed.normalized());
  }
}

double SyntheticEnv::expected_reward(int group, const Vector& x) const {
  return reward_value(cfg_.reward_fn, theta(group).dot(x));
}

Vector SyntheticEnv::sample_context(int c, std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s = cfg_.group_spread[c];
  Vector x = cfg_.group_centers.row(c).transpose();
  for (int i = 0; i < cfg_.d_x; ++i) x[i] += s * normal(rng);
  if (x.norm() < 1e-12) return cfg_.group_centers.row(c).transpose();
  return x.normalized();
}

EnvRound synthetic_round(const SyntheticEnv& env, std::mt19937_64& rng) {
  const int k = env.config().arms();
  EnvRound round;
  round.candidates.reserve(static_cast<std::size_t>(k));
  round.expected.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const int c = i % env.n_groups();
    ArmContext arm{env.sample_context(c, rng), c, i};
    round.expected.push_back(env.expected_reward(c, arm.features));
    round.candidates.push_back(std::move(arm));
  }
  return round;
}

EnvRound SyntheticEnv::next_round() {
  EnvRound round = synthetic_round(*this, rng_);
  for (auto& arm : round.candidates) arm.arm_id = next_arm_id_++;
  return round;
}

double SyntheticEnv::observe(const EnvRound& round, std::size_t chosen) {
  const double h = round.expected.at(chosen);
  if (cfg_.noise_sigma == 0.0) return h;
  std::normal_distribution<double> noise(0.0, cfg_.noise_sigma);
  return std::clamp(h + noise(rng_), 0.0, 1.0);
}

}  // namespace aggucb
