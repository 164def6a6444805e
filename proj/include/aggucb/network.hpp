#pragma once

// The group-aware scoring network: a one-layer GNN aggregation
//   H_gnn = sqrt(1/m) * act(S^k X Theta_gnn)
// concatenated with the embedded context (skip connection) and fed to an
// L-layer fully connected head
//   H_l = sqrt(1/m) * act(H_{l-1} Theta_l),   r_all = sqrt(1/m) * H_{L-1} Theta_L.
// The score of an arm offered under group c is r_all[c].
//
// Parameters live in one flat vector in canonical order: Theta_gnn
// (row-major), then Theta_1 .. Theta_L (each row-major). Gradients, the
// confidence matrix and snapshots all use this order.

#include "aggucb/common.hpp"
#include "aggucb/embedding.hpp"
#include "aggucb/graph_model.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aggucb {

enum class Activation { Tanh, Sigmoid, Relu };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

double activate(Activation a, double x) noexcept;
double activate_derivative(Activation a, double x) noexcept;

/// Shape of a plain fully connected head: input_dim -> m -> ... -> m -> 1.
struct MlpShape {
  int input_dim = 1;
  int width = 1;
  int depth = 2;
  Activation activation = Activation::Tanh;

  void validate() const;
  std::size_t param_count() const noexcept;
  /// Offset of layer l (1-based) inside the head's parameter block.
  std::size_t layer_offset(int l) const noexcept;
  Eigen::Index layer_rows(int l) const noexcept { return l == 1 ? input_dim : width; }
  Eigen::Index layer_cols(int l) const noexcept { return l == depth ? 1 : width; }
};

/// Shape of the group-aware network.
struct NetworkShape {
  int width = 32;        ///< m
  int depth = 2;         ///< L
  int context_dim = 1;   ///< d_x
  int n_groups = 1;      ///< N_c
  Activation activation = Activation::Tanh;

  void validate() const;
  int embed_dim() const noexcept { return context_dim * n_groups; }
  int head_input_dim() const noexcept { return width + embed_dim(); }
  MlpShape head() const noexcept { return {head_input_dim(), width, depth, activation}; }
  std::size_t gnn_param_count() const noexcept {
    return static_cast<std::size_t>(embed_dim()) * static_cast<std::size_t>(width);
  }
  std::size_t param_count() const noexcept { return gnn_param_count() + head().param_count(); }
  bool operator==(const NetworkShape&) const = default;
};

/// Flat parameter vector plus views of the individual weight matrices.
class NetworkParams {
 public:
  NetworkParams() = default;
  NetworkParams(const NetworkShape& shape, Vector flat);

  const NetworkShape& shape() const noexcept { return shape_; }
  const Vector& flat() const noexcept { return flat_; }
  Vector& flat() noexcept { return flat_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(flat_.size()); }

  ConstRowMatrixMap theta_gnn() const;
  RowMatrixMap theta_gnn();
  /// Theta_l for l in [1, L]; Theta_L is m x 1.
  ConstRowMatrixMap fc(int l) const;
  RowMatrixMap fc(int l);

  Vector flatten() const { return flat_; }
  static NetworkParams unflatten(const NetworkShape& shape, const Vector& flat);

 private:
  NetworkShape shape_;
  Vector flat_;
};

/// Theta_gnn and Theta_1..Theta_{L-1} ~ N(0, 1), Theta_L ~ N(0, 1/m).
/// Deterministic for a fixed seed.
NetworkParams init_params(const NetworkShape& shape, std::uint64_t seed);

/// Same scheme for a bare fully connected head.
Vector init_mlp_params(const MlpShape& shape, std::uint64_t seed);

/// Intermediate values of a full forward pass over all N_c output rows.
struct ForwardTrace {
  Matrix h_agg_pre;            ///< S^k X Theta_gnn, N_c x m
  Matrix h_gnn;                ///< N_c x m
  Matrix h_0;                  ///< N_c x (m + d_x N_c)
  std::vector<Matrix> hidden;  ///< H_1 .. H_{L-1}, each N_c x m
  Vector r_all;                ///< N_c
  double selected = 0.0;       ///< r_all[c]
};

struct ForwardResult {
  double value = 0.0;
  ForwardTrace trace;
};

/// Full forward pass. Every row of r_all is computed exactly as value() would
/// compute it for that group, so r_all[c] == value(..., c, ...) bit for bit.
ForwardResult forward(const NormalizedAdjacency& adj, const EmbeddedArm& arm, int group,
                      const NetworkParams& params);

/// Point estimate r_all[group] without the trace.
double value(const NormalizedAdjacency& adj, const Vector& features, int group,
             const NetworkParams& params);
double value(const NormalizedAdjacency& adj, const Vector& features, int group,
             const NetworkShape& shape, std::span<const double> params);

/// Point estimate and its exact gradient with respect to all parameters,
/// written to `grad` (length p) in canonical order.
double value_and_gradient(const NormalizedAdjacency& adj, const Vector& features, int group,
                          const NetworkParams& params, std::span<double> grad);
double value_and_gradient(const NormalizedAdjacency& adj, const Vector& features, int group,
                          const NetworkShape& shape, std::span<const double> params,
                          std::span<double> grad);

/// Convenience wrapper returning the gradient as a vector.
Vector gradient(const NormalizedAdjacency& adj, const EmbeddedArm& arm, int group,
                const NetworkParams& params);

namespace mlp {

/// Output of the bare head on one input row.
double value(const MlpShape& shape, std::span<const double> params, const Eigen::Ref<const Vector>& input);

/// Output and parameter gradient; optionally the gradient w.r.t. the input.
double value_and_gradient(const MlpShape& shape, std::span<const double> params,
                          const Eigen::Ref<const Vector>& input, std::span<double> grad,
                          Vector* input_grad = nullptr);

}  // namespace mlp

/// Parameter snapshot: a text header line with the shape followed by the p
/// values, one per line, printed with 17 significant digits.
void save_params(std::ostream& out, const NetworkParams& params);
NetworkParams load_params(std::istream& in);

}  // namespace aggucb
