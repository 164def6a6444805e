#pragma once

#include "aggucb/embedding.hpp"

#include <string_view>
#include <vector>

namespace aggucb {

/// One round's offer: candidate arms and their noiseless expected rewards.
struct EnvRound {
  std::vector<ArmContext> candidates;
  std::vector<double> expected;

  double best_expected() const;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string_view name() const = 0;
  virtual int context_dim() const = 0;
  virtual int n_groups() const = 0;

  virtual EnvRound next_round() = 0;
  /// Realized reward for playing candidate `chosen` of `round`.
  virtual double observe(const EnvRound& round, std::size_t chosen) = 0;

  /// Whether agents should feed every offered context to the graph estimator.
  virtual bool ingest_all_candidates() const { return true; }
};

}  // namespace aggucb
