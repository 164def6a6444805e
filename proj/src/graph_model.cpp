#include "aggucb/graph_model.hpp"

#include "aggucb/kernels.hpp"

#include <cmath>
#include <numeric>

namespace aggucb {

namespace {

constexpr double kUnitNormTol = 1e-9;

// Distance assumed between a group with no data and any other group.
constexpr double kEmptyGroupMmd = 1.0;

}  // namespace

void KernelConfig::validate() const {
  if (!(bandwidth_k > 0.0) || !std::isfinite(bandwidth_k))
    throw std::invalid_argument("kernel bandwidth_k must be positive");
  if (!(bandwidth_s > 0.0) || !std::isfinite(bandwidth_s))
    throw std::invalid_argument("kernel bandwidth_s must be positive");
}

double rbf_kernel(const Vector& x, const Vector& y, const KernelConfig& cfg) {
  if (x.size() != y.size()) throw ShapeError("rbf_kernel: dimension mismatch");
  if (!x.allFinite() || !y.allFinite()) throw std::invalid_argument("rbf_kernel: non-finite input");
  const double sq = (x - y).squaredNorm();
  return std::exp(-sq / (2.0 * cfg.bandwidth_k * cfg.bandwidth_k));
}

ArmGroupGraph::ArmGroupGraph(int n_groups, int context_dim, KernelConfig cfg)
    : n_groups_(n_groups), dim_(context_dim), cfg_(cfg) {
  if (n_groups < 1) throw std::invalid_argument("ArmGroupGraph needs at least one group");
  if (context_dim < 1) throw std::invalid_argument("ArmGroupGraph needs context_dim >= 1");
  cfg_.validate();
  stats_.assign(static_cast<std::size_t>(n_groups), GroupStats(context_dim));
  gram_ = Matrix::Zero(n_groups, n_groups);
  weights_ = Matrix::Constant(n_groups, n_groups, std::exp(-kEmptyGroupMmd / cfg_.bandwidth_s));
  weights_.diagonal().setOnes();
}

int ArmGroupGraph::checked(int c) const {
  if (c < 0 || c >= n_groups_)
    throw std::out_of_range("group index " + std::to_string(c) + " out of range [0, " +
                            std::to_string(n_groups_) + ")");
  return c;
}

void ArmGroupGraph::ingest(std::span<const GroupObservation> batch) {
  for (const auto& obs : batch) {
    checked(obs.group);
    if (obs.context.size() != dim_) throw ShapeError("ingest: context dimension mismatch");
    if (!obs.context.allFinite() || std::abs(obs.context.norm() - 1.0) > kUnitNormTol)
      throw std::invalid_argument("ingest: contexts must be finite and unit-norm");
  }

  std::vector<bool> dirty(static_cast<std::size_t>(n_groups_), false);
  const double inv = 1.0 / (2.0 * cfg_.bandwidth_k * cfg_.bandwidth_k);
  for (const auto& obs : batch) {
    const int c = obs.group;
    const std::span<const double> x(obs.context.data(), static_cast<std::size_t>(dim_));
    for (int c2 = 0; c2 < n_groups_; ++c2) {
      const auto& store = stats_[static_cast<std::size_t>(c2)];
      const std::size_t n = store.count();
      if (n == 0) continue;
      scratch_.resize(n);
      kernels::parallel::rbf_row(x, store.raw(), inv, scratch_);
      const double s = std::accumulate(scratch_.begin(), scratch_.end(), 0.0);
      if (c2 == c) {
        gram_(c, c) += 2.0 * s;
      } else {
        gram_(c, c2) += s;
        gram_(c2, c) += s;
      }
    }
    gram_(c, c) += 1.0;  // k(x, x)
    stats_[static_cast<std::size_t>(c)].append(obs.context);
    dirty[static_cast<std::size_t>(c)] = true;
  }
  for (int c = 0; c < n_groups_; ++c)
    if (dirty[static_cast<std::size_t>(c)]) refresh_pairs_of(c);
}

void ArmGroupGraph::ingest(int group, const Vector& context) {
  const GroupObservation obs{group, context};
  ingest(std::span<const GroupObservation>(&obs, 1));
}

double ArmGroupGraph::mmd_sq(int c, int c2) const {
  const double nc = static_cast<double>(count(c));
  const double nc2 = static_cast<double>(count(c2));
  if (nc == 0.0) throw EmptyGroupError(c);
  if (nc2 == 0.0) throw EmptyGroupError(c2);
  if (c == c2) return 0.0;
  const double v = gram_(c, c) / (nc * nc) + gram_(c2, c2) / (nc2 * nc2) -
                   2.0 * gram_(c, c2) / (nc * nc2);
  return v > 0.0 ? v : 0.0;
}

double ArmGroupGraph::edge_weight(int c, int c2) const {
  return std::exp(-mmd_sq(c, c2) / cfg_.bandwidth_s);
}

double ArmGroupGraph::pair_weight(int c, int c2) const {
  if (c == c2) return 1.0;
  if (count(c) == 0 || count(c2) == 0) return std::exp(-kEmptyGroupMmd / cfg_.bandwidth_s);
  return edge_weight(c, c2);
}

void ArmGroupGraph::refresh_pairs_of(int c) {
  for (int c2 = 0; c2 < n_groups_; ++c2) {
    const double w = pair_weight(c, c2);
    weights_(c, c2) = w;
    weights_(c2, c) = w;
  }
}

void ArmGroupGraph::refresh_weights() {
  for (int c = 0; c < n_groups_; ++c)
    for (int c2 = c; c2 < n_groups_; ++c2) {
      const double w = pair_weight(c, c2);
      weights_(c, c2) = w;
      weights_(c2, c) = w;
    }
}

Matrix ArmGroupGraph::normalized_adjacency() const {
  const Vector degree = weights_.rowwise().sum();
  const Vector inv_sqrt = degree.array().sqrt().inverse();
  const Matrix s = inv_sqrt.asDiagonal() * weights_ * inv_sqrt.asDiagonal();
  return 0.5 * (s + s.transpose());
}

NormalizedAdjacency ArmGroupGraph::normalized_adjacency_power(int k) const {
  if (k < 0) throw std::invalid_argument("hop count must be nonnegative");
  NormalizedAdjacency out;
  out.hop = k;
  out.s_power = Matrix::Identity(n_groups_, n_groups_);
  if (k == 0) return out;
  const Matrix s = normalized_adjacency();
  out.s_power = s;
  for (int i = 1; i < k; ++i) {
    const Matrix next = out.s_power * s;
    out.s_power = 0.5 * (next + next.transpose());
  }
  return out;
}

}  // namespace aggucb
