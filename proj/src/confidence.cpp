#include "aggucb/confidence.hpp"

#include "aggucb/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace aggucb {

std::string_view to_string(ConfidenceMode m) noexcept {
  return m == ConfidenceMode::Exact ? "exact" : "diagonal";
}

ConfidenceMode parse_confidence_mode(std::string_view name) {
  if (name == "exact") return ConfidenceMode::Exact;
  if (name == "diagonal") return ConfidenceMode::Diagonal;
  throw std::invalid_argument("unknown confidence mode '" + std::string(name) + "'");
}

ConfidenceMode default_confidence_mode(std::size_t p) noexcept {
  return p <= kExactModeMaxParams ? ConfidenceMode::Exact : ConfidenceMode::Diagonal;
}

ConfidenceState::ConfidenceState(std::size_t p, double lambda, int width, ConfidenceMode mode)
    : mode_(mode), p_(p), lambda_(lambda), m_(width) {
  if (p == 0) throw std::invalid_argument("ConfidenceState: p must be >= 1");
  if (!(lambda > 0.0)) throw std::invalid_argument("ConfidenceState: lambda must be positive");
  if (width < 1) throw std::invalid_argument("ConfidenceState: network width must be >= 1");
  if (mode_ == ConfidenceMode::Exact) {
    packed_inv_.assign(kernels::packed_size(p), 0.0);
    for (std::size_t i = 0; i < p; ++i) packed_inv_[kernels::packed_row(i) + i] = 1.0 / lambda;
    scratch_.resize(p);
  } else {
    diag_.assign(p, lambda);
  }
}

void ConfidenceState::check_dim(std::size_t n) const {
  if (n != p_)
    throw ShapeError("confidence: gradient has dimension " + std::to_string(n) + ", expected " +
                     std::to_string(p_));
}

double ConfidenceState::width(std::span<const double> g) const {
  check_dim(g.size());
  const double m = static_cast<double>(m_);
  if (mode_ == ConfidenceMode::Diagonal) {
    double s = 0.0;
    for (std::size_t i = 0; i < p_; ++i) s += g[i] * g[i] / diag_[i];
    return std::sqrt(s / m);
  }
  RowMatrix one(1, static_cast<Eigen::Index>(p_));
  one.row(0) = Eigen::Map<const Eigen::RowVectorXd>(g.data(), static_cast<Eigen::Index>(p_));
  double q = 0.0;
  kernels::parallel::packed_quadratic_forms(packed_inv_, one, std::span<double>(&q, 1));
  return std::sqrt(std::max(q, 0.0) / m);
}

std::vector<double> ConfidenceState::widths(const RowMatrix& gradients) const {
  check_dim(static_cast<std::size_t>(gradients.cols()));
  const auto k = static_cast<std::size_t>(gradients.rows());
  std::vector<double> out(k);
  if (mode_ == ConfidenceMode::Diagonal) {
    for (std::size_t v = 0; v < k; ++v)
      out[v] = width(std::span<const double>(gradients.row(static_cast<Eigen::Index>(v)).data(), p_));
    return out;
  }
  kernels::parallel::packed_quadratic_forms(packed_inv_, gradients, out);
  const double m = static_cast<double>(m_);
  for (auto& q : out) q = std::sqrt(std::max(q, 0.0) / m);
  return out;
}

void ConfidenceState::update(std::span<const double> g) {
  check_dim(g.size());
  ++updates_;
  if (mode_ == ConfidenceMode::Diagonal) {
    for (std::size_t i = 0; i < p_; ++i) diag_[i] += g[i] * g[i];
    return;
  }
  // Z^-1 <- Z^-1 - (Z^-1 g)(Z^-1 g)^T / (1 + g^T Z^-1 g)
  kernels::parallel::packed_symv(packed_inv_, g, scratch_);
  double quad = 0.0;
  for (std::size_t i = 0; i < p_; ++i) quad += g[i] * scratch_[i];
  if (quad == 0.0) return;
  kernels::parallel::packed_rank1_update(packed_inv_, scratch_, -1.0 / (1.0 + quad));
}

Matrix ConfidenceState::inverse_dense() const {
  if (mode_ == ConfidenceMode::Diagonal) {
    Matrix d(static_cast<Eigen::Index>(p_), 1);
    for (std::size_t i = 0; i < p_; ++i) d(static_cast<Eigen::Index>(i), 0) = diag_[i];
    return d;
  }
  const auto p = static_cast<Eigen::Index>(p_);
  Matrix z(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = packed_inv_[kernels::packed_row(static_cast<std::size_t>(i)) + static_cast<std::size_t>(j)];
      z(i, j) = v;
      z(j, i) = v;
    }
  return z;
}

}  // namespace aggucb
