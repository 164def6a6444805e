#include "aggucb/policy.hpp"

#include <cmath>
#include <exception>

namespace aggucb {

void AgentConfig::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("AgentConfig: gamma must be >= 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("AgentConfig: lambda must be positive");
  if (width < 1) throw std::invalid_argument("AgentConfig: width must be >= 1");
  if (depth < 2) throw std::invalid_argument("AgentConfig: depth must be >= 2");
  if (k_hop < 0) throw std::invalid_argument("AgentConfig: k_hop must be >= 0");
  if (train_every < 1) throw std::invalid_argument("AgentConfig: train_every must be >= 1");
  kernel.validate();
  train.validate();
}

std::size_t argmax_lowest(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("argmax over an empty candidate list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

void Policy::check_decision(const RoundDecision& d) const {
  if (d.generation != generation_)
    throw std::logic_error("decision was produced by policy generation " + std::to_string(d.generation) +
                           ", current generation is " + std::to_string(generation_));
  if (d.candidates.empty() || d.chosen_index >= d.candidates.size())
    throw std::invalid_argument("decision does not reference a candidate");
}

namespace {

void check_candidates(std::span<const ArmContext> candidates) {
  if (candidates.empty()) throw std::invalid_argument("step: empty candidate list");
  for (const auto& c : candidates) c.validate();
}

void fill_decision(RoundDecision& d, std::span<const ArmContext> candidates) {
  d.candidates.assign(candidates.begin(), candidates.end());
  std::vector<double> s(d.scores.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = d.scores[i].score;
  d.chosen_index = argmax_lowest(s);
  d.chosen = candidates[d.chosen_index];
  d.score = d.scores[d.chosen_index].score;
  d.point = d.scores[d.chosen_index].point;
  d.width = d.scores[d.chosen_index].width;
}

}  // namespace

// ---------------------------------------------------------------------------
// Reward models

MlpRewardModel::MlpRewardModel(Input input, int context_dim, int n_groups, int width, int depth,
                               Activation act)
    : input_(input), context_dim_(context_dim), n_groups_(n_groups) {
  if (context_dim < 1 || n_groups < 1) throw std::invalid_argument("MlpRewardModel: bad dimensions");
  shape_ = MlpShape{input == Input::Raw ? context_dim : context_dim * n_groups, width, depth, act};
  shape_.validate();
}

Vector MlpRewardModel::initial_params(std::uint64_t seed) const { return init_mlp_params(shape_, seed); }

void MlpRewardModel::check_context(const ArmContext& ctx) const {
  if (ctx.features.size() != context_dim_) throw ShapeError("context dimension mismatch");
  if (ctx.group < 0 || ctx.group >= n_groups_) throw std::out_of_range("candidate group out of range");
}

double MlpRewardModel::evaluate(std::span<const double> params, const ArmContext& ctx,
                                std::span<double> grad) const {
  if (input_ == Input::Raw) {
    if (grad.empty()) return mlp::value(shape_, params, ctx.features);
    return mlp::value_and_gradient(shape_, params, ctx.features, grad);
  }
  Vector row = Vector::Zero(shape_.input_dim);
  row.segment(static_cast<Eigen::Index>(ctx.group) * context_dim_, context_dim_) = ctx.features;
  if (grad.empty()) return mlp::value(shape_, params, row);
  return mlp::value_and_gradient(shape_, params, row, grad);
}

GraphRewardModel::GraphRewardModel(const NetworkShape& shape, int k_hop, KernelConfig kernel,
                                   bool ingest_all)
    : shape_(shape),
      k_hop_(k_hop),
      ingest_all_(ingest_all),
      graph_(shape.n_groups, shape.context_dim, kernel) {
  shape_.validate();
  adjacency_ = graph_.normalized_adjacency_power(k_hop_);
}

Vector GraphRewardModel::initial_params(std::uint64_t seed) const { return init_params(shape_, seed).flat(); }

void GraphRewardModel::check_context(const ArmContext& ctx) const {
  if (ctx.features.size() != shape_.context_dim) throw ShapeError("context dimension mismatch");
  if (ctx.group < 0 || ctx.group >= shape_.n_groups) throw std::out_of_range("candidate group out of range");
}

double GraphRewardModel::evaluate(std::span<const double> params, const ArmContext& ctx,
                                  std::span<double> grad) const {
  if (grad.empty()) return value(adjacency_, ctx.features, ctx.group, shape_, params);
  return value_and_gradient(adjacency_, ctx.features, ctx.group, shape_, params, grad);
}

void GraphRewardModel::observe(std::span<const ArmContext> candidates, const ArmContext& chosen) {
  std::vector<GroupObservation> batch;
  if (ingest_all_) {
    batch.reserve(candidates.size());
    for (const auto& c : candidates) batch.push_back({c.group, c.features});
  } else {
    batch.push_back({chosen.group, chosen.features});
  }
  graph_.ingest(batch);
  adjacency_ = graph_.normalized_adjacency_power(k_hop_);
}

// ---------------------------------------------------------------------------
// Gradient UCB

NeuralUcbPolicy::NeuralUcbPolicy(std::string name, std::unique_ptr<RewardModel> model,
                                 const AgentConfig& cfg, std::uint64_t seed)
    : name_(std::move(name)),
      model_(std::move(model)),
      cfg_(cfg),
      theta0_(model_->initial_params(seed)),
      params_(theta0_),
      confidence_(model_->param_count(), cfg.lambda, cfg.width,
                  cfg.mode.value_or(default_confidence_mode(model_->param_count()))) {
  cfg_.validate();
}

RoundDecision NeuralUcbPolicy::step(std::span<const ArmContext> candidates) const {
  check_candidates(candidates);
  for (const auto& c : candidates) model_->check_context(c);

  const std::size_t p = model_->param_count();
  const auto k = static_cast<std::ptrdiff_t>(candidates.size());
  RowMatrix grads(k, static_cast<Eigen::Index>(p));
  std::vector<double> points(candidates.size());
  const std::span<const double> theta(params_.data(), p);
  std::exception_ptr failure;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < k; ++i) {
    try {
      points[static_cast<std::size_t>(i)] = model_->evaluate(
          theta, candidates[static_cast<std::size_t>(i)], std::span<double>(grads.row(i).data(), p));
    } catch (...) {
#pragma omp critical(aggucb_step_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  const std::vector<double> widths = confidence_.widths(grads);
  RoundDecision d;
  d.generation = generation_;
  d.scores.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    d.scores[i] = CandidateScore{points[i], widths[i], points[i] + cfg_.gamma * widths[i]};
  fill_decision(d, candidates);
  d.gradient = grads.row(static_cast<Eigen::Index>(d.chosen_index)).transpose();
  return d;
}

void NeuralUcbPolicy::update(const RoundDecision& decision, double reward) {
  check_decision(decision);
  if (static_cast<std::size_t>(decision.gradient.size()) != model_->param_count())
    throw ShapeError("decision gradient has the wrong dimension");

  model_->observe(decision.candidates, decision.chosen);
  buffer_.append(decision.chosen, reward);

  const RewardModel& model = *model_;
  const ModelFn fn = [&model](std::span<const double> params, const ArmContext& ctx, std::span<double> grad) {
    return model.evaluate(params, ctx, grad);
  };
  if (buffer_.size() % static_cast<std::size_t>(cfg_.train_every) == 0) {
    const std::size_t round = buffer_.size();
    TrainCurveFn curve;
    if (curve_) curve = [&](int step, double l) { curve_(round, step, l); };
    const Vector& start = cfg_.train.warm_start ? params_ : theta0_;
    TrainResult r = train(start, buffer_, fn, cfg_.train, curve);
    params_ = std::move(r.params);
    last_loss_ = r.final_loss;
  } else {
    last_loss_ = loss(std::span<const double>(params_.data(), static_cast<std::size_t>(params_.size())), buffer_, fn);
  }

  confidence_.update(decision.gradient);
  ++generation_;
}

// ---------------------------------------------------------------------------
// LinUCB

LinUcbPolicy::LinUcbPolicy(int context_dim, int n_groups, double gamma, double lambda)
    : dim_(context_dim), n_groups_(n_groups), gamma_(gamma) {
  if (context_dim < 1 || n_groups < 1) throw std::invalid_argument("LinUcbPolicy: bad dimensions");
  if (!(lambda > 0.0)) throw std::invalid_argument("LinUcbPolicy: lambda must be positive");
  a_inv_.assign(static_cast<std::size_t>(n_groups), Matrix::Identity(context_dim, context_dim) / lambda);
  b_.assign(static_cast<std::size_t>(n_groups), Vector::Zero(context_dim));
}

RoundDecision LinUcbPolicy::step(std::span<const ArmContext> candidates) const {
  check_candidates(candidates);
  RoundDecision d;
  d.generation = generation_;
  d.scores.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.features.size() != dim_) throw ShapeError("context dimension mismatch");
    if (c.group < 0 || c.group >= n_groups_) throw std::out_of_range("candidate group out of range");
    const auto g = static_cast<std::size_t>(c.group);
    const Vector ax = a_inv_[g] * c.features;
    const double point = ax.dot(b_[g]);
    const double width = std::sqrt(std::max(c.features.dot(ax), 0.0));
    d.scores[i] = CandidateScore{point, width, point + gamma_ * width};
  }
  fill_decision(d, candidates);
  return d;
}

void LinUcbPolicy::update(const RoundDecision& decision, double reward) {
  check_decision(decision);
  const auto g = static_cast<std::size_t>(decision.chosen.group);
  const Vector& x = decision.chosen.features;
  const Vector ax = a_inv_[g] * x;
  a_inv_[g] -= (ax * ax.transpose()) / (1.0 + x.dot(ax));
  b_[g] += reward * x;
  ++generation_;
}

// ---------------------------------------------------------------------------
// Oracle

RoundDecision OraclePolicy::step(std::span<const ArmContext> candidates) const {
  check_candidates(candidates);
  if (expected_.size() != candidates.size())
    throw std::logic_error("oracle policy needs expected rewards for every candidate");
  RoundDecision d;
  d.generation = generation_;
  d.scores.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) d.scores[i] = CandidateScore{expected_[i], 0.0, expected_[i]};
  fill_decision(d, candidates);
  return d;
}

void OraclePolicy::update(const RoundDecision& decision, double) {
  check_decision(decision);
  expected_.clear();
  ++generation_;
}

// ---------------------------------------------------------------------------
// Factories

std::unique_ptr<NeuralUcbPolicy> make_agg_ucb(const AgentConfig& cfg, int context_dim, int n_groups,
                                              std::uint64_t seed) {
  const NetworkShape shape{cfg.width, cfg.depth, context_dim, n_groups, cfg.activation};
  auto model = std::make_unique<GraphRewardModel>(shape, cfg.k_hop, cfg.kernel, cfg.ingest_all_candidates);
  return std::make_unique<NeuralUcbPolicy>("agg_ucb", std::move(model), cfg, seed);
}

std::unique_ptr<NeuralUcbPolicy> make_neural_pool(const AgentConfig& cfg, int context_dim,
                                                  int n_groups, std::uint64_t seed) {
  auto model = std::make_unique<MlpRewardModel>(MlpRewardModel::Input::Raw, context_dim, n_groups,
                                                cfg.width, cfg.depth, cfg.activation);
  return std::make_unique<NeuralUcbPolicy>("neural_pool", std::move(model), cfg, seed);
}

std::unique_ptr<NeuralUcbPolicy> make_neural_ind(const AgentConfig& cfg, int context_dim,
                                                 int n_groups, std::uint64_t seed) {
  auto model = std::make_unique<MlpRewardModel>(MlpRewardModel::Input::EmbeddedRow, context_dim,
                                                n_groups, cfg.width, cfg.depth, cfg.activation);
  return std::make_unique<NeuralUcbPolicy>("neural_ind", std::move(model), cfg, seed);
}

std::unique_ptr<Policy> make_policy(std::string_view algo, const AgentConfig& cfg, int context_dim,
                                    int n_groups, std::uint64_t seed) {
  if (algo == "agg_ucb") return make_agg_ucb(cfg, context_dim, n_groups, seed);
  if (algo == "neural_pool") return make_neural_pool(cfg, context_dim, n_groups, seed);
  if (algo == "neural_ind") return make_neural_ind(cfg, context_dim, n_groups, seed);
  if (algo == "lin_ucb") return std::make_unique<LinUcbPolicy>(context_dim, n_groups, cfg.gamma, cfg.lambda);
  if (algo == "oracle") return std::make_unique<OraclePolicy>();
  throw std::invalid_argument("unknown algorithm '" + std::string(algo) + "'");
}

}  // namespace aggucb
