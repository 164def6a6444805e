#include "aggucb/embedding.hpp"

#include <cmath>

namespace aggucb {

void ArmContext::validate() const {
  if (features.size() == 0) throw std::invalid_argument("ArmContext: empty feature vector");
  if (!features.allFinite()) throw std::invalid_argument("ArmContext: non-finite features");
  if (std::abs(features.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("ArmContext: features must have unit norm");
}

Vector unit_normalize(const Vector& x) {
  if (!x.allFinite()) throw std::invalid_argument("unit_normalize: non-finite vector");
  const double n = x.norm();
  if (n == 0.0) throw std::invalid_argument("unit_normalize: zero vector");
  return x / n;
}

EmbeddedArm::EmbeddedArm(const ArmContext& ctx, int n_groups) : ctx_(ctx), n_groups_(n_groups) {
  if (n_groups < 1) throw std::invalid_argument("embed: n_groups must be >= 1");
  ctx_.validate();
}

Vector EmbeddedArm::row(int r) const {
  if (r < 0 || r >= n_groups_) throw std::out_of_range("EmbeddedArm::row: index out of range");
  Vector out = Vector::Zero(cols());
  out.segment(static_cast<Eigen::Index>(r) * dim(), dim()) = ctx_.features;
  return out;
}

Matrix EmbeddedArm::multiply_right(const Eigen::Ref<const Matrix>& theta) const {
  if (theta.rows() != cols())
    throw ShapeError("multiply_right: theta has " + std::to_string(theta.rows()) +
                     " rows, expected " + std::to_string(cols()));
  const Eigen::Index d = dim();
  Matrix out(n_groups_, theta.cols());
  for (Eigen::Index c = 0; c < n_groups_; ++c)
    out.row(c).noalias() = ctx_.features.transpose() * theta.middleRows(c * d, d);
  return out;
}

Matrix EmbeddedArm::materialize() const {
  Matrix out = Matrix::Zero(rows(), cols());
  for (Eigen::Index c = 0; c < n_groups_; ++c)
    out.block(c, c * dim(), 1, dim()) = ctx_.features.transpose();
  return out;
}

}  // namespace aggucb
