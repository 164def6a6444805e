#pragma once

#include "aggucb/common.hpp"
#include "aggucb/embedding.hpp"
#include "aggucb/network.hpp"

#include <functional>
#include <span>
#include <vector>

namespace aggucb {

struct ReplayEntry {
  ArmContext context;  // context.group is the group the arm was played under
  double reward = 0.0;
};

/// Append-only history of played arms and observed rewards.
class ReplayBuffer {
 public:
  void append(ArmContext context, double reward);
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const ReplayEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<ReplayEntry>& entries() const noexcept { return entries_; }

 private:
  std::vector<ReplayEntry> entries_;
};

struct TrainConfig {
  double eta = 1e-3;        ///< step size
  int steps = 100;          ///< J
  bool warm_start = false;  ///< start from the previous round's parameters instead of Theta_0

  void validate() const;
};

/// Value of a model at `params` for one played arm; writes the gradient when
/// `grad` is non-empty.
using ModelFn = std::function<double(std::span<const double> params, const ArmContext& ctx,
                                     std::span<double> grad)>;

/// Called with (step, loss at the parameters before that step); the final
/// call has step == J and reports the loss of the returned parameters.
using TrainCurveFn = std::function<void(int step, double loss)>;

struct TrainResult {
  Vector params;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Abort threshold: loss above this multiple of the initial loss.
inline constexpr double kDivergenceFactor = 1e6;

/// 1/2 sum_tau (f(x_tau) - r_tau)^2; zero for an empty buffer.
double loss(std::span<const double> params, const ReplayBuffer& buffer, const ModelFn& model);

/// J steps of full-batch gradient descent on the squared loss, starting at
/// `start`. Throws DivergenceError naming the step at which the loss became
/// non-finite or exceeded kDivergenceFactor times the initial loss.
TrainResult train(const Vector& start, const ReplayBuffer& buffer, const ModelFn& model,
                  const TrainConfig& cfg, const TrainCurveFn& curve = {});

/// ModelFn for the group-aware network on a fixed graph.
ModelFn network_model(const NetworkShape& shape, const NormalizedAdjacency& adj);

double loss(const NetworkParams& params, const ReplayBuffer& buffer, const NormalizedAdjacency& adj);

NetworkParams train(const NetworkParams& start, const ReplayBuffer& buffer,
                    const NormalizedAdjacency& adj, const TrainConfig& cfg,
                    const TrainCurveFn& curve = {});

}  // namespace aggucb
