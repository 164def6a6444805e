#pragma once

#include "aggucb/common.hpp"

#include <span>
#include <vector>

namespace aggucb {

/// Bandwidths of the RBF context kernel and of the edge-weight kernel.
struct KernelConfig {
  double bandwidth_k = 1.0;  ///< RBF length scale
  double bandwidth_s = 1.0;  ///< edge weight w = exp(-mmd^2 / bandwidth_s)

  void validate() const;
};

/// exp(-|x - y|^2 / (2 bandwidth_k^2)). Throws std::invalid_argument on
/// non-finite input or mismatched dimensions.
double rbf_kernel(const Vector& x, const Vector& y, const KernelConfig& cfg);

/// One observed context tagged with its arm group.
struct GroupObservation {
  int group = 0;
  Vector context;
};

/// Contexts observed so far for one arm group, stored row-major.
class GroupStats {
 public:
  explicit GroupStats(int dim = 0) : dim_(dim) {}

  std::size_t count() const noexcept { return dim_ == 0 ? 0 : data_.size() / static_cast<std::size_t>(dim_); }
  int dim() const noexcept { return dim_; }
  std::span<const double> raw() const noexcept { return data_; }
  Eigen::Map<const Vector> context(std::size_t i) const {
    return Eigen::Map<const Vector>(data_.data() + i * static_cast<std::size_t>(dim_), dim_);
  }
  void append(const Vector& x) { data_.insert(data_.end(), x.data(), x.data() + x.size()); }

 private:
  int dim_;
  std::vector<double> data_;
};

/// S^k for the symmetrically normalized adjacency S = D^-1/2 A D^-1/2.
struct NormalizedAdjacency {
  Matrix s_power;
  int hop = 0;

  int n_groups() const noexcept { return static_cast<int>(s_power.rows()); }
};

/// The arm-group graph: per-group context stores, Gram double sums
/// K[c][c'] = sum_{x in X_c} sum_{x' in X_c'} k(x, x'), and the edge weights
/// derived from the kernel-mean (MMD) distance between groups.
///
/// Mutation (ingest) is single-writer; const members may run concurrently
/// between mutations.
class ArmGroupGraph {
 public:
  ArmGroupGraph(int n_groups, int context_dim, KernelConfig cfg = {});

  int n_groups() const noexcept { return n_groups_; }
  int context_dim() const noexcept { return dim_; }
  const KernelConfig& kernel() const noexcept { return cfg_; }
  const GroupStats& stats(int c) const { return stats_.at(checked(c)); }
  std::size_t count(int c) const { return stats(c).count(); }
  const Matrix& gram_sums() const noexcept { return gram_; }
  const Matrix& weights() const noexcept { return weights_; }

  /// Adds each context to its group's store, updating the Gram sums
  /// incrementally and refreshing the weights of every pair touching a
  /// changed group.
  void ingest(std::span<const GroupObservation> batch);
  void ingest(int group, const Vector& context);

  /// Squared distance between the empirical kernel mean embeddings of two
  /// groups (biased MMD^2), clamped at 0. Throws EmptyGroupError.
  double mmd_sq(int c, int c2) const;

  /// exp(-mmd_sq / bandwidth_s). Throws EmptyGroupError.
  double edge_weight(int c, int c2) const;

  /// Recomputes every weight from the Gram sums.
  void refresh_weights();

  /// S = D^-1/2 A D^-1/2 with A = weights (self-loops on the diagonal).
  Matrix normalized_adjacency() const;

  /// S^k by repeated multiplication; k = 0 gives the identity.
  NormalizedAdjacency normalized_adjacency_power(int k) const;

 private:
  int checked(int c) const;
  double pair_weight(int c, int c2) const;
  void refresh_pairs_of(int c);

  int n_groups_;
  int dim_;
  KernelConfig cfg_;
  std::vector<GroupStats> stats_;
  Matrix gram_;
  Matrix weights_;
  std::vector<double> scratch_;
};

}  // namespace aggucb
