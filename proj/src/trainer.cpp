#include "aggucb/trainer.hpp"

#include "aggucb/kernels.hpp"

#include <cmath>
#include <exception>

namespace aggucb {

void ReplayBuffer::append(ArmContext context, double reward) {
  entries_.push_back(ReplayEntry{std::move(context), reward});
}

void TrainConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("TrainConfig: eta must be positive");
  if (steps < 0) throw std::invalid_argument("TrainConfig: steps must be nonnegative");
}

namespace {

bool diverged(double current, double initial) {
  if (!std::isfinite(current)) return true;
  return initial > 0.0 && current > kDivergenceFactor * initial;
}

}  // namespace

double loss(std::span<const double> params, const ReplayBuffer& buffer, const ModelFn& model) {
  const auto n = static_cast<std::ptrdiff_t>(buffer.size());
  std::vector<double> residual(buffer.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const auto& e = buffer[static_cast<std::size_t>(i)];
      residual[static_cast<std::size_t>(i)] = model(params, e.context, {}) - e.reward;
    } catch (...) {
#pragma omp critical(aggucb_loss_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  double total = 0.0;
  for (double r : residual) total += 0.5 * r * r;
  return total;
}

TrainResult train(const Vector& start, const ReplayBuffer& buffer, const ModelFn& model,
                  const TrainConfig& cfg, const TrainCurveFn& curve) {
  cfg.validate();
  const auto p = static_cast<std::size_t>(start.size());
  TrainResult result;
  result.params = start;
  Vector grad(start.size());

  const auto residual_gradient = [&](std::size_t i, std::span<double> g) {
    const auto& e = buffer[i];
    return model(std::span<const double>(result.params.data(), p), e.context, g) - e.reward;
  };

  for (int step = 0; step < cfg.steps; ++step) {
    const double current = kernels::parallel::accumulate_residual_gradient(
        buffer.size(), residual_gradient, std::span<double>(grad.data(), p));
    if (step == 0) result.initial_loss = current;
    if (diverged(current, result.initial_loss)) throw DivergenceError(step, current);
    if (curve) curve(step, current);
    result.params.noalias() -= cfg.eta * grad;
  }

  result.final_loss = loss(std::span<const double>(result.params.data(), p), buffer, model);
  if (cfg.steps == 0) result.initial_loss = result.final_loss;
  if (diverged(result.final_loss, result.initial_loss)) throw DivergenceError(cfg.steps, result.final_loss);
  if (curve) curve(cfg.steps, result.final_loss);
  return result;
}

ModelFn network_model(const NetworkShape& shape, const NormalizedAdjacency& adj) {
  return [shape, &adj](std::span<const double> params, const ArmContext& ctx, std::span<double> grad) {
    if (grad.empty()) return value(adj, ctx.features, ctx.group, shape, params);
    return value_and_gradient(adj, ctx.features, ctx.group, shape, params, grad);
  };
}

double loss(const NetworkParams& params, const ReplayBuffer& buffer, const NormalizedAdjacency& adj) {
  return loss(std::span<const double>(params.flat().data(), params.size()), buffer,
              network_model(params.shape(), adj));
}

NetworkParams train(const NetworkParams& start, const ReplayBuffer& buffer,
                    const NormalizedAdjacency& adj, const TrainConfig& cfg, const TrainCurveFn& curve) {
  TrainResult r = train(start.flat(), buffer, network_model(start.shape(), adj), cfg, curve);
  return NetworkParams(start.shape(), std::move(r.params));
}

}  // namespace aggucb
