#include "aggucb/kernels.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <omp.h>

namespace aggucb {
namespace {

namespace k = kernels;

std::vector<double> random_packed_spd(std::size_t p, std::mt19937_64& rng) {
  std::vector<double> packed(k::packed_size(p), 0.0);
  for (std::size_t i = 0; i < p; ++i) packed[k::packed_row(i) + i] = 1.0;
  for (int r = 0; r < 5; ++r) {
    const Vector u = testing::random_vector(static_cast<Eigen::Index>(p), rng, 0.2);
    k::serial::packed_rank1_update(packed, std::span<const double>(u.data(), p), 1.0);
  }
  return packed;
}

Matrix unpack(const std::vector<double>& packed, std::size_t p) {
  Matrix z(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j <= i; ++j) z(i, j) = z(j, i) = packed[k::packed_row(i) + j];
  return z;
}

TEST(Packed, Layout) {
  EXPECT_EQ(k::packed_size(1), 1u);
  EXPECT_EQ(k::packed_size(4), 10u);
  EXPECT_EQ(k::packed_row(3), 6u);
}

TEST(Kernels, RbfRowSerialMatchesParallel) {
  std::mt19937_64 rng(1);
  const int d = 5, n = 9000;
  const Vector x = testing::random_unit(d, rng);
  std::vector<double> stored;
  for (int i = 0; i < n; ++i) {
    const Vector y = testing::random_unit(d, rng);
    stored.insert(stored.end(), y.data(), y.data() + d);
  }
  std::vector<double> a(n), b(n);
  k::serial::rbf_row(std::span<const double>(x.data(), d), stored, 0.5, a);
  k::parallel::rbf_row(std::span<const double>(x.data(), d), stored, 0.5, b);
  EXPECT_EQ(a, b);
  const Vector y0 = Eigen::Map<const Vector>(stored.data(), d);
  EXPECT_NEAR(a[0], testing::rbf(x, y0, 1.0), 1e-15);
  std::vector<double> small(3);
  EXPECT_THROW(k::serial::rbf_row(std::span<const double>(x.data(), d), stored, 0.5, small), ShapeError);
}

TEST(Kernels, SymvMatchesDenseAndSerial) {
  std::mt19937_64 rng(2);
  for (std::size_t p : {1u, 7u, 130u, 301u}) {
    const auto packed = random_packed_spd(p, rng);
    const Vector g = testing::random_vector(static_cast<Eigen::Index>(p), rng);
    std::vector<double> a(p), b(p);
    k::serial::packed_symv(packed, std::span<const double>(g.data(), p), a);
    k::parallel::packed_symv(packed, std::span<const double>(g.data(), p), b);
    const Vector dense = unpack(packed, p) * g;
    for (std::size_t i = 0; i < p; ++i) {
      EXPECT_NEAR(a[i], dense[static_cast<Eigen::Index>(i)], 1e-12);
      EXPECT_NEAR(b[i], dense[static_cast<Eigen::Index>(i)], 1e-12);
    }
  }
}

TEST(Kernels, QuadraticFormsBitIdenticalAcrossImplementations) {
  std::mt19937_64 rng(3);
  const std::size_t p = 257;
  const auto packed = random_packed_spd(p, rng);
  RowMatrix v(6, p);
  for (int r = 0; r < 6; ++r) v.row(r) = testing::random_vector(static_cast<Eigen::Index>(p), rng).transpose();
  std::vector<double> a(6), b(6);
  k::serial::packed_quadratic_forms(packed, v, a);
  k::parallel::packed_quadratic_forms(packed, v, b);
  EXPECT_EQ(a, b);
  const Matrix z = unpack(packed, p);
  for (int r = 0; r < 6; ++r) {
    const Vector g = v.row(r).transpose();
    EXPECT_NEAR(a[static_cast<std::size_t>(r)], g.dot(z * g), 1e-10);
  }
}

TEST(Kernels, Rank1MatchesSerial) {
  std::mt19937_64 rng(4);
  const std::size_t p = 200;
  auto a = random_packed_spd(p, rng);
  auto b = a;
  const Vector u = testing::random_vector(static_cast<Eigen::Index>(p), rng);
  k::serial::packed_rank1_update(a, std::span<const double>(u.data(), p), -0.3);
  k::parallel::packed_rank1_update(b, std::span<const double>(u.data(), p), -0.3);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
  std::vector<double> wrong(10);
  EXPECT_THROW(k::serial::packed_rank1_update(wrong, std::span<const double>(u.data(), p), 1.0), ShapeError);
}

TEST(Kernels, ResidualGradientAccumulation) {
  std::mt19937_64 rng(5);
  const std::size_t n = 1000, p = 17;
  Matrix grads(p, n);
  Vector res(n);
  for (std::size_t i = 0; i < n; ++i) {
    grads.col(static_cast<Eigen::Index>(i)) = testing::random_vector(p, rng);
    res[static_cast<Eigen::Index>(i)] = testing::random_vector(1, rng)[0];
  }
  const k::ResidualGradientFn fn = [&](std::size_t i, std::span<double> g) {
    for (std::size_t q = 0; q < p; ++q) g[q] = grads(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(i));
    return res[static_cast<Eigen::Index>(i)];
  };
  std::vector<double> a(p), b(p);
  const double la = k::serial::accumulate_residual_gradient(n, fn, a);
  const double lb = k::parallel::accumulate_residual_gradient(n, fn, b);
  EXPECT_NEAR(la, 0.5 * res.squaredNorm(), 1e-10);
  EXPECT_NEAR(lb, la, 1e-10);
  const Vector expect = grads * res;
  for (std::size_t q = 0; q < p; ++q) {
    EXPECT_NEAR(a[q], expect[static_cast<Eigen::Index>(q)], 1e-10);
    EXPECT_NEAR(b[q], expect[static_cast<Eigen::Index>(q)], 1e-10);
  }
}

TEST(Kernels, ParallelResultsIndependentOfThreadCount) {
  std::mt19937_64 rng(6);
  const std::size_t p = 150, n = 700;
  const auto packed = random_packed_spd(p, rng);
  const Vector g = testing::random_vector(static_cast<Eigen::Index>(p), rng);
  Matrix grads(p, n);
  for (std::size_t i = 0; i < n; ++i) grads.col(static_cast<Eigen::Index>(i)) = testing::random_vector(p, rng);
  const k::ResidualGradientFn fn = [&](std::size_t i, std::span<double> out) {
    for (std::size_t q = 0; q < p; ++q) out[q] = grads(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(i));
    return 0.01 * static_cast<double>(i % 13);
  };
  const auto run = [&](int threads) {
    omp_set_num_threads(threads);
    std::vector<double> s(p), acc(p);
    k::parallel::packed_symv(packed, std::span<const double>(g.data(), p), s);
    const double l = k::parallel::accumulate_residual_gradient(n, fn, acc);
    s.insert(s.end(), acc.begin(), acc.end());
    s.push_back(l);
    return s;
  };
  const int saved = omp_get_max_threads();
  const auto one = run(1);
  const auto four = run(4);
  omp_set_num_threads(saved);
  EXPECT_EQ(one, four);
}

}  // namespace
}  // namespace aggucb
