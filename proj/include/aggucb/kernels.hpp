#pragma once

// Data-parallel inner loops used by the bandit. Every kernel has a serial
// reference in `serial::` and an OpenMP version in `parallel::` with the
// same signature. Tests compare the two; the benchmark in bench/ times them.
//
// The parallel reductions partition work into blocks whose boundaries do not
// depend on the thread count and combine partial results in block order, so
// results are reproducible across OMP_NUM_THREADS settings.

#include "aggucb/common.hpp"

#include <cstddef>
#include <functional>
#include <span>

namespace aggucb::kernels {

// Lower-triangular packed storage of a symmetric p x p matrix: row i holds
// entries (i,0..i) starting at offset i(i+1)/2.
constexpr std::size_t packed_size(std::size_t p) noexcept { return p * (p + 1) / 2; }
constexpr std::size_t packed_row(std::size_t i) noexcept { return i * (i + 1) / 2; }

// Entries per block in residual-gradient accumulation.
inline constexpr std::size_t kReductionBlock = 32;

// Writes the gradient of entry `i` into `grad` (length p) and returns its
// residual f_i - r_i.
using ResidualGradientFn = std::function<double(std::size_t i, std::span<double> grad)>;

namespace serial {

/// out[j] = exp(-|x - s_j|^2 * inv_two_sigma_sq) for the rows s_j of `stored`
/// (row-major, out.size() rows of x.size() columns).
void rbf_row(std::span<const double> x, std::span<const double> stored, double inv_two_sigma_sq,
             std::span<double> out);

/// Z += alpha * u u^T on packed storage.
void packed_rank1_update(std::span<double> packed, std::span<const double> u, double alpha);

/// out[v] = g_v^T Z g_v for every row g_v of `vectors`.
void packed_quadratic_forms(std::span<const double> packed, const RowMatrix& vectors,
                            std::span<double> out);

/// out = Z g.
void packed_symv(std::span<const double> packed, std::span<const double> g, std::span<double> out);

/// grad_out = sum_i res_i * g_i, returns 1/2 sum_i res_i^2.
double accumulate_residual_gradient(std::size_t n, const ResidualGradientFn& fn,
                                    std::span<double> grad_out);

}  // namespace serial

namespace parallel {

void rbf_row(std::span<const double> x, std::span<const double> stored, double inv_two_sigma_sq,
             std::span<double> out);
void packed_rank1_update(std::span<double> packed, std::span<const double> u, double alpha);
void packed_quadratic_forms(std::span<const double> packed, const RowMatrix& vectors,
                            std::span<double> out);
void packed_symv(std::span<const double> packed, std::span<const double> g, std::span<double> out);
double accumulate_residual_gradient(std::size_t n, const ResidualGradientFn& fn,
                                    std::span<double> grad_out);

}  // namespace parallel

}  // namespace aggucb::kernels
