#pragma once

#include "aggucb/common.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace aggucb {

enum class ConfidenceMode { Exact, Diagonal };

std::string_view to_string(ConfidenceMode m) noexcept;
ConfidenceMode parse_confidence_mode(std::string_view name);

/// Exact mode is the default up to this many parameters.
inline constexpr std::size_t kExactModeMaxParams = 20000;
ConfidenceMode default_confidence_mode(std::size_t p) noexcept;

/// The gradient design matrix Z = lambda I + sum g g^T and the UCB width
/// sqrt(g^T Z^-1 g / m).
///
/// Exact mode keeps Z^-1 in packed lower-triangular storage and applies the
/// Sherman-Morrison update per observed gradient. Diagonal mode keeps only
/// diag(Z) and uses sum g_i^2 / Z_ii in place of the quadratic form.
class ConfidenceState {
 public:
  ConfidenceState(std::size_t p, double lambda, int width, ConfidenceMode mode);

  ConfidenceMode mode() const noexcept { return mode_; }
  std::size_t dim() const noexcept { return p_; }
  double lambda() const noexcept { return lambda_; }
  int network_width() const noexcept { return m_; }
  std::size_t updates() const noexcept { return updates_; }

  double width(std::span<const double> g) const;
  double width(const Vector& g) const { return width(std::span<const double>(g.data(), static_cast<std::size_t>(g.size()))); }

  /// Widths of every row of `gradients` (k x p) in one pass over Z^-1.
  std::vector<double> widths(const RowMatrix& gradients) const;

  void update(std::span<const double> g);
  void update(const Vector& g) { update(std::span<const double>(g.data(), static_cast<std::size_t>(g.size()))); }

  /// Dense Z^-1 (exact mode) or diag(Z) as a p x 1 matrix (diagonal mode).
  Matrix inverse_dense() const;
  const std::vector<double>& diagonal() const noexcept { return diag_; }

 private:
  void check_dim(std::size_t n) const;

  ConfidenceMode mode_;
  std::size_t p_;
  double lambda_;
  int m_;
  std::size_t updates_ = 0;
  std::vector<double> packed_inv_;  // exact
  std::vector<double> diag_;        // diagonal
  std::vector<double> scratch_;
};

}  // namespace aggucb
