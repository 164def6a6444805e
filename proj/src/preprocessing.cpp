#include "aggucb/preprocessing.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <limits>
#include <random>

namespace aggucb {

namespace {

// Nearest centroid index (lowest on ties) and its squared distance.
std::pair<int, double> nearest(const RowMatrix& centroids, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < centroids.rows(); ++j) {
    const double d = (centroids.row(j) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return {best, best_d};
}

RowMatrix kmeanspp_init(const RowMatrix& points, int k, std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  RowMatrix centroids(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centroids.row(0) = points.row(first(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < c; ++j) best = std::min(best, (centroids.row(j) - points.row(i)).squaredNorm());
      d2[static_cast<std::size_t>(i)] = best;
      total += best;
    }
    Eigen::Index pick;
    if (total > 0.0) {
      std::discrete_distribution<Eigen::Index> draw(d2.begin(), d2.end());
      pick = draw(rng);
    } else {
      pick = first(rng);
    }
    centroids.row(c) = points.row(pick);
  }
  return centroids;
}

Matrix orthonormalize(const Matrix& m) {
  Eigen::HouseholderQR<Matrix> qr(m);
  return qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
}

}  // namespace

KMeansResult kmeans(const RowMatrix& points, int k, int max_iters, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (k > n) throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " exceeds the number of points (" +
                                         std::to_string(n) + ")");
  if (max_iters < 1) throw std::invalid_argument("kmeans: max_iters must be >= 1");
  if (!points.allFinite()) throw std::invalid_argument("kmeans: non-finite input");

  std::mt19937_64 rng(seed);
  KMeansResult res;
  res.centroids = kmeanspp_init(points, k, rng);
  res.assignments.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n));

  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto [c, d] = nearest(res.centroids, points.row(i));
      auto& a = res.assignments[static_cast<std::size_t>(i)];
      if (a != c) changed = true;
      a = c;
      dist[static_cast<std::size_t>(i)] = d;
      objective += d;
    }
    res.objective.push_back(objective);
    if (!changed) break;

    RowMatrix sums = RowMatrix::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = res.assignments[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        res.centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        continue;
      }
      Eigen::Index far = 0;
      for (Eigen::Index i = 1; i < n; ++i)
        if (dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(far)]) far = i;
      res.centroids.row(c) = points.row(far);
      dist[static_cast<std::size_t>(far)] = 0.0;
    }
  }
  return res;
}

SvdResult truncated_svd(const Matrix& a, int d, int iters, std::uint64_t seed) {
  if (d < 1 || d > std::min(a.rows(), a.cols()))
    throw std::invalid_argument("truncated_svd: rank must be in [1, min(rows, cols)]");
  if (iters < 1) throw std::invalid_argument("truncated_svd: iters must be >= 1");
  if (!a.allFinite()) throw std::invalid_argument("truncated_svd: non-finite input");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix v(a.cols(), d);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = normal(rng);
  v = orthonormalize(v);
  Matrix u;
  for (int it = 0; it < iters; ++it) {
    u = orthonormalize(a * v);
    v = orthonormalize(a.transpose() * u);
  }
  const Matrix b = u.transpose() * a * v;
  Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return SvdResult{u * svd.matrixU(), svd.singularValues(), v * svd.matrixV()};
}

}  // namespace aggucb
