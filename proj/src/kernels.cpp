#include "aggucb/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <vector>

namespace aggucb::kernels {

namespace {

using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

void check_packed(std::size_t packed_len, std::size_t p) {
  if (packed_len != packed_size(p)) {
    throw ShapeError("packed storage has " + std::to_string(packed_len) + " entries, expected " +
                     std::to_string(packed_size(p)));
  }
}

// Row boundaries splitting the lower triangle into blocks of roughly equal area.
std::vector<std::size_t> triangle_blocks(std::size_t p, std::size_t blocks) {
  std::vector<std::size_t> bounds(blocks + 1, 0);
  for (std::size_t b = 1; b < blocks; ++b) {
    const double frac = std::sqrt(static_cast<double>(b) / static_cast<double>(blocks));
    bounds[b] = std::min(p, static_cast<std::size_t>(frac * static_cast<double>(p)));
    bounds[b] = std::max(bounds[b], bounds[b - 1]);
  }
  bounds[blocks] = p;
  return bounds;
}

constexpr std::size_t kSymvBlocks = 64;
constexpr std::size_t kBlocksPerWave = 256;

// Row i's contribution g_i (z_ii g_i + 2 sum_{j<i} z_ij g_j) for every vector
// at once, so the packed row is read a single time.
void quadratic_row_terms(std::span<const double> packed, const RowMatrix& vectors, std::size_t i, double* terms) {
  const auto len = static_cast<Eigen::Index>(i);
  const ConstVecMap zrow(packed.data() + packed_row(i), len);
  const double zii = packed[packed_row(i) + i];
  const Eigen::VectorXd off = vectors.leftCols(len) * zrow;
  for (Eigen::Index v = 0; v < vectors.rows(); ++v) {
    const double gi = vectors(v, len);
    terms[v] = gi * (zii * gi + 2.0 * off[v]);
  }
}

}  // namespace

namespace serial {

void rbf_row(std::span<const double> x, std::span<const double> stored, double inv_two_sigma_sq,
             std::span<double> out) {
  const std::size_t d = x.size();
  if (stored.size() != out.size() * d) throw ShapeError("rbf_row: stored/out size mismatch");
  for (std::size_t j = 0; j < out.size(); ++j) {
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = x[k] - stored[j * d + k];
      sq += diff * diff;
    }
    out[j] = std::exp(-sq * inv_two_sigma_sq);
  }
}

void packed_rank1_update(std::span<double> packed, std::span<const double> u, double alpha) {
  const std::size_t p = u.size();
  check_packed(packed.size(), p);
  for (std::size_t i = 0; i < p; ++i) {
    double* row = packed.data() + packed_row(i);
    const double ai = alpha * u[i];
    for (std::size_t j = 0; j <= i; ++j) row[j] += ai * u[j];
  }
}

void packed_quadratic_forms(std::span<const double> packed, const RowMatrix& vectors,
                            std::span<double> out) {
  const std::size_t p = static_cast<std::size_t>(vectors.cols());
  const std::size_t k = static_cast<std::size_t>(vectors.rows());
  check_packed(packed.size(), p);
  if (out.size() != k) throw ShapeError("packed_quadratic_forms: output size mismatch");
  std::vector<double> row_terms(p * k);
  for (std::size_t i = 0; i < p; ++i) quadratic_row_terms(packed, vectors, i, row_terms.data() + i * k);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t v = 0; v < k; ++v) out[v] += row_terms[i * k + v];
}

void packed_symv(std::span<const double> packed, std::span<const double> g, std::span<double> out) {
  const std::size_t p = g.size();
  check_packed(packed.size(), p);
  if (out.size() != p) throw ShapeError("packed_symv: output size mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    const double* row = packed.data() + packed_row(i);
    double acc = row[i] * g[i];
    for (std::size_t j = 0; j < i; ++j) {
      acc += row[j] * g[j];
      out[j] += row[j] * g[i];
    }
    out[i] += acc;
  }
}

double accumulate_residual_gradient(std::size_t n, const ResidualGradientFn& fn,
                                    std::span<double> grad_out) {
  std::fill(grad_out.begin(), grad_out.end(), 0.0);
  std::vector<double> g(grad_out.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double res = fn(i, g);
    loss += 0.5 * res * res;
    for (std::size_t q = 0; q < g.size(); ++q) grad_out[q] += res * g[q];
  }
  return loss;
}

}  // namespace serial

namespace parallel {

void rbf_row(std::span<const double> x, std::span<const double> stored, double inv_two_sigma_sq,
             std::span<double> out) {
  const std::size_t d = x.size();
  if (stored.size() != out.size() * d) throw ShapeError("rbf_row: stored/out size mismatch");
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const double* s = stored.data() + static_cast<std::size_t>(j) * d;
    double sq = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = x[k] - s[k];
      sq += diff * diff;
    }
    out[static_cast<std::size_t>(j)] = std::exp(-sq * inv_two_sigma_sq);
  }
}

void packed_rank1_update(std::span<double> packed, std::span<const double> u, double alpha) {
  const std::size_t p = u.size();
  check_packed(packed.size(), p);
  const ConstVecMap uvec(u.data(), static_cast<Eigen::Index>(p));
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(p); ++i) {
    const auto len = static_cast<Eigen::Index>(i + 1);
    VecMap row(packed.data() + packed_row(static_cast<std::size_t>(i)), len);
    row.noalias() += (alpha * u[static_cast<std::size_t>(i)]) * uvec.head(len);
  }
}

void packed_quadratic_forms(std::span<const double> packed, const RowMatrix& vectors,
                            std::span<double> out) {
  const std::size_t p = static_cast<std::size_t>(vectors.cols());
  const std::size_t k = static_cast<std::size_t>(vectors.rows());
  check_packed(packed.size(), p);
  if (out.size() != k) throw ShapeError("packed_quadratic_forms: output size mismatch");
  std::vector<double> row_terms(p * k);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(p); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    quadratic_row_terms(packed, vectors, i, row_terms.data() + i * k);
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t v = 0; v < k; ++v) out[v] += row_terms[i * k + v];
}

void packed_symv(std::span<const double> packed, std::span<const double> g, std::span<double> out) {
  const std::size_t p = g.size();
  check_packed(packed.size(), p);
  if (out.size() != p) throw ShapeError("packed_symv: output size mismatch");
  const auto bounds = triangle_blocks(p, kSymvBlocks);
  // Block b touches only indices below bounds[b + 1].
  std::vector<std::vector<double>> partial(kSymvBlocks);
  const ConstVecMap gvec(g.data(), static_cast<Eigen::Index>(p));
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t bb = 0; bb < static_cast<std::ptrdiff_t>(kSymvBlocks); ++bb) {
    const auto b = static_cast<std::size_t>(bb);
    auto& acc = partial[b];
    acc.assign(bounds[b + 1], 0.0);
    VecMap accv(acc.data(), static_cast<Eigen::Index>(acc.size()));
    for (std::size_t i = bounds[b]; i < bounds[b + 1]; ++i) {
      const auto len = static_cast<Eigen::Index>(i);
      const ConstVecMap zrow(packed.data() + packed_row(i), len);
      const double zii = packed[packed_row(i) + i];
      acc[i] += zii * g[i] + zrow.dot(gvec.head(len));
      accv.head(len).noalias() += g[i] * zrow;
    }
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& acc : partial)
    for (std::size_t i = 0; i < acc.size(); ++i) out[i] += acc[i];
}

double accumulate_residual_gradient(std::size_t n, const ResidualGradientFn& fn,
                                    std::span<double> grad_out) {
  const std::size_t p = grad_out.size();
  std::fill(grad_out.begin(), grad_out.end(), 0.0);
  const std::size_t n_blocks = (n + kReductionBlock - 1) / kReductionBlock;
  double loss = 0.0;
  std::vector<double> partial_grad;
  std::vector<double> partial_loss;
  for (std::size_t wave = 0; wave < n_blocks; wave += kBlocksPerWave) {
    const std::size_t wave_blocks = std::min(kBlocksPerWave, n_blocks - wave);
    partial_grad.assign(wave_blocks * p, 0.0);
    partial_loss.assign(wave_blocks, 0.0);
    std::exception_ptr failure;
#pragma omp parallel
    {
      std::vector<double> g(p);
#pragma omp for schedule(dynamic, 1)
      for (std::ptrdiff_t bb = 0; bb < static_cast<std::ptrdiff_t>(wave_blocks); ++bb) {
        const auto b = static_cast<std::size_t>(bb);
        const std::size_t begin = (wave + b) * kReductionBlock;
        const std::size_t end = std::min(n, begin + kReductionBlock);
        VecMap acc(partial_grad.data() + b * p, static_cast<Eigen::Index>(p));
        const ConstVecMap gv(g.data(), static_cast<Eigen::Index>(p));
        try {
          for (std::size_t i = begin; i < end; ++i) {
            const double res = fn(i, g);
            partial_loss[b] += 0.5 * res * res;
            acc.noalias() += res * gv;
          }
        } catch (...) {
#pragma omp critical(aggucb_kernel_failure)
          if (!failure) failure = std::current_exception();
        }
      }
    }
    if (failure) std::rethrow_exception(failure);
    VecMap out(grad_out.data(), static_cast<Eigen::Index>(p));
    for (std::size_t b = 0; b < wave_blocks; ++b) {
      out += ConstVecMap(partial_grad.data() + b * p, static_cast<Eigen::Index>(p));
      loss += partial_loss[b];
    }
  }
  return loss;
}

}  // namespace parallel

}  // namespace aggucb::kernels
