#pragma once

#include "aggucb/common.hpp"

#include <vector>

namespace aggucb {

struct KMeansResult {
  std::vector<int> assignments;
  RowMatrix centroids;
  /// Within-cluster sum of squares after each Lloyd iteration.
  std::vector<double> objective;
};

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are re-seeded at
/// the point farthest from its centroid.
KMeansResult kmeans(const RowMatrix& points, int k, int max_iters, std::uint64_t seed);

struct SvdResult {
  Matrix u;       ///< rows x d, orthonormal columns
  Vector sigma;   ///< descending
  Matrix v;       ///< cols x d, orthonormal columns
};

/// Rank-d factorization by orthogonal (subspace) iteration.
SvdResult truncated_svd(const Matrix& a, int d, int iters, std::uint64_t seed);

}  // namespace aggucb
