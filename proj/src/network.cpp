#include "aggucb/network.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace aggucb {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Relu: return "relu";
  }
  return "tanh";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

double activate(Activation a, double x) noexcept {
  switch (a) {
    case Activation::Tanh: return std::tanh(x);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::Relu: return x > 0.0 ? x : 0.0;
  }
  return x;
}

double activate_derivative(Activation a, double x) noexcept {
  switch (a) {
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// Shapes

void MlpShape::validate() const {
  if (input_dim < 1) throw std::invalid_argument("MlpShape: input_dim must be >= 1");
  if (width < 1) throw std::invalid_argument("MlpShape: width must be >= 1");
  if (depth < 2) throw std::invalid_argument("MlpShape: depth must be >= 2");
}

std::size_t MlpShape::param_count() const noexcept {
  const auto m = static_cast<std::size_t>(width);
  return static_cast<std::size_t>(input_dim) * m + static_cast<std::size_t>(depth - 2) * m * m + m;
}

std::size_t MlpShape::layer_offset(int l) const noexcept {
  const auto m = static_cast<std::size_t>(width);
  if (l <= 1) return 0;
  return static_cast<std::size_t>(input_dim) * m + static_cast<std::size_t>(l - 2) * m * m;
}

void NetworkShape::validate() const {
  if (width < 1) throw std::invalid_argument("NetworkShape: width must be >= 1");
  if (depth < 2) throw std::invalid_argument("NetworkShape: depth must be >= 2");
  if (context_dim < 1) throw std::invalid_argument("NetworkShape: context_dim must be >= 1");
  if (n_groups < 1) throw std::invalid_argument("NetworkShape: n_groups must be >= 1");
}

// ---------------------------------------------------------------------------
// Parameters

NetworkParams::NetworkParams(const NetworkShape& shape, Vector flat)
    : shape_(shape), flat_(std::move(flat)) {
  shape_.validate();
  if (static_cast<std::size_t>(flat_.size()) != shape_.param_count())
    throw ShapeError("NetworkParams: expected " + std::to_string(shape_.param_count()) +
                     " parameters, got " + std::to_string(flat_.size()));
}

ConstRowMatrixMap NetworkParams::theta_gnn() const {
  return {flat_.data(), shape_.embed_dim(), shape_.width};
}

RowMatrixMap NetworkParams::theta_gnn() { return {flat_.data(), shape_.embed_dim(), shape_.width}; }

ConstRowMatrixMap NetworkParams::fc(int l) const {
  const MlpShape head = shape_.head();
  if (l < 1 || l > head.depth) throw std::out_of_range("NetworkParams::fc: layer out of range");
  return {flat_.data() + shape_.gnn_param_count() + head.layer_offset(l), head.layer_rows(l),
          head.layer_cols(l)};
}

RowMatrixMap NetworkParams::fc(int l) {
  const MlpShape head = shape_.head();
  if (l < 1 || l > head.depth) throw std::out_of_range("NetworkParams::fc: layer out of range");
  return {flat_.data() + shape_.gnn_param_count() + head.layer_offset(l), head.layer_rows(l),
          head.layer_cols(l)};
}

NetworkParams NetworkParams::unflatten(const NetworkShape& shape, const Vector& flat) {
  return NetworkParams(shape, flat);
}

namespace {

void fill_mlp(const MlpShape& shape, std::mt19937_64& rng, double* out) {
  std::normal_distribution<double> standard(0.0, 1.0);
  std::normal_distribution<double> last(0.0, 1.0 / std::sqrt(static_cast<double>(shape.width)));
  const std::size_t hidden = shape.layer_offset(shape.depth);
  for (std::size_t i = 0; i < hidden; ++i) out[i] = standard(rng);
  for (std::size_t i = hidden; i < shape.param_count(); ++i) out[i] = last(rng);
}

}  // namespace

NetworkParams init_params(const NetworkShape& shape, std::uint64_t seed) {
  shape.validate();
  std::mt19937_64 rng(seed);
  Vector flat(static_cast<Eigen::Index>(shape.param_count()));
  std::normal_distribution<double> standard(0.0, 1.0);
  for (std::size_t i = 0; i < shape.gnn_param_count(); ++i) flat[static_cast<Eigen::Index>(i)] = standard(rng);
  fill_mlp(shape.head(), rng, flat.data() + shape.gnn_param_count());
  return NetworkParams(shape, std::move(flat));
}

Vector init_mlp_params(const MlpShape& shape, std::uint64_t seed) {
  shape.validate();
  std::mt19937_64 rng(seed);
  Vector flat(static_cast<Eigen::Index>(shape.param_count()));
  fill_mlp(shape, rng, flat.data());
  return flat;
}

// ---------------------------------------------------------------------------
// Fully connected head

namespace mlp {
namespace {

struct HeadPass {
  std::vector<Vector> h;  // h[0] = input, h[l] = H_l for l < L
  std::vector<Vector> z;  // z[l] = H_{l-1} Theta_l for 1 <= l < L (z[0] unused)
  double out = 0.0;
};

ConstRowMatrixMap layer(const MlpShape& s, std::span<const double> params, int l) {
  return {params.data() + s.layer_offset(l), s.layer_rows(l), s.layer_cols(l)};
}

void check(const MlpShape& s, std::span<const double> params, Eigen::Index input_size) {
  if (params.size() != s.param_count()) throw ShapeError("mlp: parameter count mismatch");
  if (input_size != s.input_dim) throw ShapeError("mlp: input dimension mismatch");
}

HeadPass run_forward(const MlpShape& s, std::span<const double> params,
                     const Eigen::Ref<const Vector>& input) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.width));
  HeadPass pass;
  pass.h.resize(static_cast<std::size_t>(s.depth));
  pass.z.resize(static_cast<std::size_t>(s.depth));
  pass.h[0] = input;
  for (int l = 1; l < s.depth; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    pass.z[ul].noalias() = layer(s, params, l).transpose() * pass.h[ul - 1];
    pass.h[ul] = pass.z[ul].unaryExpr([&](double v) { return activate(s.activation, v); }) * scale;
  }
  const auto last = layer(s, params, s.depth);
  pass.out = scale * last.col(0).dot(pass.h[static_cast<std::size_t>(s.depth - 1)]);
  return pass;
}

void run_backward(const MlpShape& s, std::span<const double> params, const HeadPass& pass,
                  std::span<double> grad, Vector* input_grad) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.width));
  const int L = s.depth;
  Eigen::Map<Vector> g_last(grad.data() + s.layer_offset(L), s.width);
  g_last = scale * pass.h[static_cast<std::size_t>(L - 1)];
  // d out / d H_{L-1}
  Vector upstream = scale * layer(s, params, L).col(0);
  for (int l = L - 1; l >= 1; --l) {
    const auto ul = static_cast<std::size_t>(l);
    const Vector dz =
        upstream.cwiseProduct(pass.z[ul].unaryExpr([&](double v) { return activate_derivative(s.activation, v); })) *
        scale;
    RowMatrixMap g_layer(grad.data() + s.layer_offset(l), s.layer_rows(l), s.layer_cols(l));
    g_layer.noalias() = pass.h[ul - 1] * dz.transpose();
    if (l > 1 || input_grad != nullptr) upstream = layer(s, params, l) * dz;
  }
  if (input_grad != nullptr) *input_grad = upstream;
}

}  // namespace

double value(const MlpShape& shape, std::span<const double> params, const Eigen::Ref<const Vector>& input) {
  check(shape, params, input.size());
  return run_forward(shape, params, input).out;
}

double value_and_gradient(const MlpShape& shape, std::span<const double> params,
                          const Eigen::Ref<const Vector>& input, std::span<double> grad,
                          Vector* input_grad) {
  check(shape, params, input.size());
  if (grad.size() != shape.param_count()) throw ShapeError("mlp: gradient buffer size mismatch");
  const HeadPass pass = run_forward(shape, params, input);
  run_backward(shape, params, pass, grad, input_grad);
  return pass.out;
}

}  // namespace mlp

// ---------------------------------------------------------------------------
// Group-aware network

namespace {

void check_inputs(const NormalizedAdjacency& adj, const Vector& features, int group,
                  const NetworkShape& s, std::size_t n_params) {
  if (adj.n_groups() != s.n_groups || adj.s_power.cols() != s.n_groups)
    throw ShapeError("network: adjacency is " + std::to_string(adj.s_power.rows()) + "x" +
                     std::to_string(adj.s_power.cols()) + ", expected " + std::to_string(s.n_groups));
  if (features.size() != s.context_dim)
    throw ShapeError("network: context has dimension " + std::to_string(features.size()) +
                     ", expected " + std::to_string(s.context_dim));
  if (group < 0 || group >= s.n_groups) throw std::out_of_range("network: group index out of range");
  if (n_params != s.param_count()) throw ShapeError("network: parameter count mismatch");
}

// P = X Theta_gnn (N_c x m): row j is x^T times block j.
Matrix project(const Vector& features, const NetworkShape& s, std::span<const double> params) {
  const ConstRowMatrixMap theta(params.data(), s.embed_dim(), s.width);
  Matrix p(s.n_groups, s.width);
  for (int j = 0; j < s.n_groups; ++j)
    p.row(j).noalias() =
        features.transpose() * theta.middleRows(static_cast<Eigen::Index>(j) * s.context_dim, s.context_dim);
  return p;
}

// Row c of S^k P, accumulated in group order.
Vector aggregate_row(const NormalizedAdjacency& adj, const Matrix& projected, int c) {
  Vector u = Vector::Zero(projected.cols());
  for (Eigen::Index j = 0; j < projected.rows(); ++j) u += adj.s_power(c, j) * projected.row(j).transpose();
  return u;
}

struct RowPass {
  Vector u;   // pre-activation aggregate
  Vector h0;  // head input
};

RowPass row_input(const NormalizedAdjacency& adj, const Vector& features, int group,
                  const NetworkShape& s, const Matrix& projected) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.width));
  RowPass r;
  r.u = aggregate_row(adj, projected, group);
  r.h0 = Vector::Zero(s.head_input_dim());
  r.h0.head(s.width) = r.u.unaryExpr([&](double v) { return activate(s.activation, v); }) * scale;
  r.h0.segment(s.width + static_cast<Eigen::Index>(group) * s.context_dim, s.context_dim) = features;
  return r;
}

std::span<const double> head_params(const NetworkShape& s, std::span<const double> params) {
  return params.subspan(s.gnn_param_count());
}

std::span<const double> as_span(const NetworkParams& params) {
  return {params.flat().data(), params.size()};
}

}  // namespace

double value(const NormalizedAdjacency& adj, const Vector& features, int group,
             const NetworkShape& s, std::span<const double> params) {
  check_inputs(adj, features, group, s, params.size());
  const Matrix projected = project(features, s, params);
  const RowPass r = row_input(adj, features, group, s, projected);
  return mlp::value(s.head(), head_params(s, params), r.h0);
}

double value(const NormalizedAdjacency& adj, const Vector& features, int group,
             const NetworkParams& params) {
  return value(adj, features, group, params.shape(), as_span(params));
}

double value_and_gradient(const NormalizedAdjacency& adj, const Vector& features, int group,
                          const NetworkShape& s, std::span<const double> params,
                          std::span<double> grad) {
  check_inputs(adj, features, group, s, params.size());
  if (grad.size() != params.size()) throw ShapeError("network: gradient buffer size mismatch");
  const Matrix projected = project(features, s, params);
  const RowPass r = row_input(adj, features, group, s, projected);

  const std::size_t gnn = s.gnn_param_count();
  Vector dh0;
  const double out =
      mlp::value_and_gradient(s.head(), head_params(s, params), r.h0, grad.subspan(gnn), &dh0);

  // d out / d u, then block j of d out / d Theta_gnn is S^k[c, j] * x du^T.
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.width));
  const Vector du =
      dh0.head(s.width).cwiseProduct(
          r.u.unaryExpr([&](double v) { return activate_derivative(s.activation, v); })) *
      scale;
  RowMatrixMap g_gnn(grad.data(), s.embed_dim(), s.width);
  const RowMatrix outer = features * du.transpose();
  for (int j = 0; j < s.n_groups; ++j)
    g_gnn.middleRows(static_cast<Eigen::Index>(j) * s.context_dim, s.context_dim) =
        adj.s_power(group, j) * outer;
  return out;
}

double value_and_gradient(const NormalizedAdjacency& adj, const Vector& features, int group,
                          const NetworkParams& params, std::span<double> grad) {
  return value_and_gradient(adj, features, group, params.shape(), as_span(params), grad);
}

Vector gradient(const NormalizedAdjacency& adj, const EmbeddedArm& arm, int group,
                const NetworkParams& params) {
  Vector g(static_cast<Eigen::Index>(params.size()));
  value_and_gradient(adj, arm.features(), group, params, std::span<double>(g.data(), params.size()));
  return g;
}

ForwardResult forward(const NormalizedAdjacency& adj, const EmbeddedArm& arm, int group,
                      const NetworkParams& params) {
  const Vector& x = arm.features();
  check_inputs(adj, x, group, params.shape(), params.size());
  if (arm.n_groups() != params.shape().n_groups) throw ShapeError("forward: embedded arm group count mismatch");
  const NetworkShape& s = params.shape();
  const MlpShape head = s.head();
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.width));
  const Matrix projected = project(x, s, as_span(params));

  ForwardResult res;
  ForwardTrace& t = res.trace;
  t.h_agg_pre.resize(s.n_groups, s.width);
  t.h_gnn.resize(s.n_groups, s.width);
  t.h_0.resize(s.n_groups, s.head_input_dim());
  t.hidden.assign(static_cast<std::size_t>(s.depth - 1), Matrix(s.n_groups, s.width));
  t.r_all.resize(s.n_groups);

  const auto hp = head_params(s, as_span(params));
  for (int c = 0; c < s.n_groups; ++c) {
    const RowPass r = row_input(adj, x, c, s, projected);
    t.h_agg_pre.row(c) = r.u.transpose();
    t.h_gnn.row(c) = r.h0.head(s.width).transpose();
    t.h_0.row(c) = r.h0.transpose();
    Vector h = r.h0;
    for (int l = 1; l < s.depth; ++l) {
      const ConstRowMatrixMap w(hp.data() + head.layer_offset(l), head.layer_rows(l), head.layer_cols(l));
      const Vector z = w.transpose() * h;
      h = z.unaryExpr([&](double v) { return activate(s.activation, v); }) * scale;
      t.hidden[static_cast<std::size_t>(l - 1)].row(c) = h.transpose();
    }
    t.r_all[c] = mlp::value(head, hp, r.h0);
  }
  t.selected = t.r_all[group];
  res.value = t.selected;
  return res;
}

// ---------------------------------------------------------------------------
// Snapshots

void save_params(std::ostream& out, const NetworkParams& params) {
  const NetworkShape& s = params.shape();
  out << "aggucb-params m=" << s.width << " L=" << s.depth << " d_x=" << s.context_dim
      << " n_groups=" << s.n_groups << " activation=" << to_string(s.activation)
      << " p=" << params.size() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < params.flat().size(); ++i) out << params.flat()[i] << '\n';
}

NetworkParams load_params(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("load_params: missing header");
  std::istringstream hs(header);
  std::string tag;
  hs >> tag;
  if (tag != "aggucb-params") throw std::runtime_error("load_params: not a parameter snapshot");
  NetworkShape s;
  std::size_t p = 0;
  std::string field;
  while (hs >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw std::runtime_error("load_params: malformed header field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string val = field.substr(eq + 1);
    if (key == "m") s.width = std::stoi(val);
    else if (key == "L") s.depth = std::stoi(val);
    else if (key == "d_x") s.context_dim = std::stoi(val);
    else if (key == "n_groups") s.n_groups = std::stoi(val);
    else if (key == "activation") s.activation = parse_activation(val);
    else if (key == "p") p = std::stoull(val);
    else throw std::runtime_error("load_params: unknown header field '" + key + "'");
  }
  s.validate();
  if (p != s.param_count()) throw std::runtime_error("load_params: header p does not match shape");
  Vector flat(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i)
    if (!(in >> flat[static_cast<Eigen::Index>(i)])) throw std::runtime_error("load_params: truncated value list");
  return NetworkParams(s, std::move(flat));
}

}  // namespace aggucb
