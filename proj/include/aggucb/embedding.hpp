#pragma once

#include "aggucb/common.hpp"

namespace aggucb {

/// A unit-norm context vector tagged with the arm group it is offered under.
struct ArmContext {
  Vector features;
  int group = 0;
  std::int64_t arm_id = 0;

  /// Throws std::invalid_argument unless |features| = 1 within 1e-9 and all
  /// entries are finite.
  void validate() const;
};

/// Returns x / |x|. Throws std::invalid_argument for zero or non-finite x.
Vector unit_normalize(const Vector& x);

/// The group-aware embedded matrix: an N_c x (d_x N_c) block-diagonal matrix
/// with one copy of the context per row block. Stored implicitly as the
/// context plus the group count.
class EmbeddedArm {
 public:
  EmbeddedArm(const ArmContext& ctx, int n_groups);

  const ArmContext& context() const noexcept { return ctx_; }
  const Vector& features() const noexcept { return ctx_.features; }
  int n_groups() const noexcept { return n_groups_; }
  int dim() const noexcept { return static_cast<int>(ctx_.features.size()); }
  Eigen::Index rows() const noexcept { return n_groups_; }
  Eigen::Index cols() const noexcept { return static_cast<Eigen::Index>(dim()) * n_groups_; }

  /// Row `r` of the logical matrix as a dense (d_x N_c)-vector.
  Vector row(int r) const;

  /// Rows (N_c x m) of X * theta where theta is (d_x N_c) x m; row c' is
  /// x^T times the c'-th d_x x m block of theta.
  Matrix multiply_right(const Eigen::Ref<const Matrix>& theta) const;

  /// Dense materialization. Test and debugging use only.
  Matrix materialize() const;

 private:
  ArmContext ctx_;
  int n_groups_;
};

inline EmbeddedArm embed(const ArmContext& ctx, int n_groups) { return EmbeddedArm(ctx, n_groups); }

}  // namespace aggucb
