// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnvp/flow.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gnvp/error.hpp"

namespace gnvp {

FlowConfig FlowConfig::for_spec(const GraphSpec& spec) {
  FlowConfig c;
  if (spec.name() == "qm9lite") {
    c.adjacency_layers = 27;
    c.node_layers = 36;
  } else if (spec.name() == "zinclite") {
    c.adjacency_layers = 38;
    c.node_layers = 38;
  } else {
    c.adjacency_layers = spec.num_nodes();
    c.node_layers = spec.num_nodes();
  }
  return c;
}

FlowModel::FlowModel(GraphSpec spec, FlowConfig config, std::uint64_t seed)
    : spec_(std::move(spec)), config_(config) {
  if (config_.scale_clamp <= 0) throw InvalidArgument("FlowConfig: scale_clamp must be positive");
  const std::size_t n = spec_.num_nodes();
  const std::size_t row = n * spec_.num_bond_types();
  const std::vector<std::size_t> hidden(config_.mlp_depth, config_.mlp_hidden);
  const Rng root(seed);
  for (std::size_t k = 0; k < config_.adjacency_layers; ++k) {
    const std::string prefix = "adj." + std::to_string(k);
    adj_s_.emplace_back(prefix + ".s", (n - 1) * row, hidden, row, config_.batch_norm);
    adj_t_.emplace_back(prefix + ".t", (n - 1) * row, hidden, row, config_.batch_norm);
    Rng rs = root.split(2 * k);
    Rng rt = root.split(2 * k + 1);
    adj_s_.back().init(params_, buffers_, rs);
    adj_t_.back().init(params_, buffers_, rt);
  }
  for (std::size_t k = 0; k < config_.node_layers; ++k) {
    node_t_.emplace_back("node." + std::to_string(k) + ".t", spec_.num_bond_types(), spec_.num_atom_types(),
                         config_.gcn_hidden, config_.gcn_rounds, spec_.num_atom_types(), config_.batch_norm);
    Rng r = root.split(2 * config_.adjacency_layers + k);
    node_t_.back().init(params_, buffers_, r);
  }
  params_.add(kLogSigma, Tensor::scalar(0));
}

std::vector<ad::Var> FlowModel::relation_inputs(ad::Tape& tape, const Tensor& discrete) const {
  const std::size_t n = spec_.num_nodes(), r = spec_.num_bond_types();
  if (discrete.rank() != 4 || discrete.dim(1) != n || discrete.dim(2) != n || discrete.dim(3) != r) {
    throw ShapeError("relation_inputs: expected [B," + std::to_string(n) + "," + std::to_string(n) + "," +
                     std::to_string(r) + "], got " + shape_string(discrete.shape()));
  }
  const std::size_t batch = discrete.dim(0);
  std::vector<ad::Var> out;
  for (std::size_t c = 0; c < r; ++c) {
    Tensor rel(Shape{batch, n, n});
    for (std::size_t e = 0; e < batch * n * n; ++e) rel[e] = discrete[e * r + c];
    out.push_back(tape.constant(std::move(rel)));
  }
  return out;
}

std::pair<ad::Var, ad::Var> FlowModel::scale_and_shift(const NetContext& ctx, std::size_t layer, ad::Var z_a) const {
  const std::size_t n = spec_.num_nodes();
  const std::size_t batch = z_a.shape().at(0);
  const std::size_t row = z_a.shape().at(2);
  const std::size_t target = adjacency_target(layer);
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != target) rest.push_back(i);
  }
  const ad::Var cond = ad::reshape(ad::index_select(z_a, ad::Axis{1}, rest), Shape{batch, (n - 1) * row});
  const Real clamp = config_.scale_clamp;
  const ad::Var s = ad::scale(ad::tanh(ad::scale(adj_s_.at(layer).forward(ctx, cond), 1 / clamp)), clamp);
  const ad::Var t = adj_t_.at(layer).forward(ctx, cond);
  return {s, t};
}

ad::Var FlowModel::adjacency_layer_forward(const NetContext& ctx, std::size_t layer, ad::Var z_a,
                                           ad::Var* logdet) const {
  const std::size_t batch = z_a.shape().at(0);
  const std::size_t row = z_a.shape().at(2);
  const std::size_t target[] = {adjacency_target(layer)};
  const auto [s, t] = scale_and_shift(ctx, layer, z_a);
  const ad::Var old_row = ad::reshape(ad::index_select(z_a, ad::Axis{1}, target), Shape{batch, row});
  const ad::Var new_row = ad::add(ad::mul(old_row, ad::exp(s)), t);
  if (logdet != nullptr) *logdet = ad::add(*logdet, ad::sum(s, ad::Axis{1}));
  return ad::masked_assign(z_a, ad::Axis{1}, target[0], ad::reshape(new_row, Shape{batch, 1, row}));
}

ad::Var FlowModel::adjacency_layer_inverse(const NetContext& ctx, std::size_t layer, ad::Var z_a) const {
  const std::size_t batch = z_a.shape().at(0);
  const std::size_t row = z_a.shape().at(2);
  const std::size_t target[] = {adjacency_target(layer)};
  const auto [s, t] = scale_and_shift(ctx, layer, z_a);
  const ad::Var new_row = ad::reshape(ad::index_select(z_a, ad::Axis{1}, target), Shape{batch, row});
  const ad::Var old_row = ad::mul(ad::sub(new_row, t), ad::exp(ad::scale(s, -1)));
  return ad::masked_assign(z_a, ad::Axis{1}, target[0], ad::reshape(old_row, Shape{batch, 1, row}));
}

namespace {

// Shift for the target row, computed with that row hidden from the network.
ad::Var node_shift(const NetContext& ctx, const RelGcnNet& net, std::size_t target, ad::Var z_x,
                   std::span<const ad::Var> relations) {
  const std::size_t batch = z_x.shape().at(0);
  const std::size_t m = z_x.shape().at(2);
  const ad::Var hidden_row = ctx.tape.constant(Tensor(Shape{batch, 1, m}));
  const ad::Var masked = ad::masked_assign(z_x, ad::Axis{1}, target, hidden_row);
  return net.forward(ctx, masked, relations, target);
}

}  // namespace

ad::Var FlowModel::node_layer_forward(const NetContext& ctx, std::size_t layer, ad::Var z_x,
                                      std::span<const ad::Var> relations) const {
  const std::size_t batch = z_x.shape().at(0);
  const std::size_t m = z_x.shape().at(2);
  const std::size_t target[] = {node_target(layer)};
  const ad::Var t = node_shift(ctx, node_t_.at(layer), target[0], z_x, relations);
  const ad::Var old_row = ad::reshape(ad::index_select(z_x, ad::Axis{1}, target), Shape{batch, m});
  return ad::masked_assign(z_x, ad::Axis{1}, target[0], ad::reshape(ad::add(old_row, t), Shape{batch, 1, m}));
}

ad::Var FlowModel::node_layer_inverse(const NetContext& ctx, std::size_t layer, ad::Var z_x,
                                      std::span<const ad::Var> relations) const {
  const std::size_t batch = z_x.shape().at(0);
  const std::size_t m = z_x.shape().at(2);
  const std::size_t target[] = {node_target(layer)};
  const ad::Var t = node_shift(ctx, node_t_.at(layer), target[0], z_x, relations);
  const ad::Var new_row = ad::reshape(ad::index_select(z_x, ad::Axis{1}, target), Shape{batch, m});
  return ad::masked_assign(z_x, ad::Axis{1}, target[0], ad::reshape(ad::sub(new_row, t), Shape{batch, 1, m}));
}

FlowOutput FlowModel::forward(const NetContext& ctx, const Tensor& adjacency, const Tensor& features,
                              const Tensor& discrete) const {
  const std::size_t n = spec_.num_nodes(), m = spec_.num_atom_types(), r = spec_.num_bond_types();
  if (adjacency.rank() != 4 || adjacency.dim(1) != n || adjacency.dim(2) != n || adjacency.dim(3) != r) {
    throw ShapeError("FlowModel::forward: adjacency shape " + shape_string(adjacency.shape()) +
                     " does not match spec '" + spec_.name() + "'");
  }
  const std::size_t batch = adjacency.dim(0);
  if (features.shape() != Shape{batch, n, m}) {
    throw ShapeError("FlowModel::forward: features shape " + shape_string(features.shape()) +
                     " does not match spec '" + spec_.name() + "'");
  }
  ad::Tape& tape = ctx.tape;
  const std::vector<ad::Var> relations = relation_inputs(tape, discrete);
  ad::Var z_x = tape.constant(features);
  for (std::size_t k = 0; k < config_.node_layers; ++k) z_x = node_layer_forward(ctx, k, z_x, relations);
  ad::Var z_a = tape.constant(adjacency.reshaped(Shape{batch, n, n * r}));
  ad::Var logdet = tape.constant(Tensor(Shape{batch}));
  for (std::size_t k = 0; k < config_.adjacency_layers; ++k) z_a = adjacency_layer_forward(ctx, k, z_a, &logdet);
  const ad::Var parts[] = {ad::reshape(z_a, Shape{batch, n * n * r}), ad::reshape(z_x, Shape{batch, n * m})};
  return {ad::concat(parts, ad::Axis{1}), logdet};
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) throw InvalidArgument("stack: no tensors");
  Shape shape = parts.front().shape();
  shape.insert(shape.begin(), parts.size());
  Tensor out(shape);
  const std::size_t each = parts.front().size();
  for (std::size_t b = 0; b < parts.size(); ++b) {
    if (parts[b].shape() != parts.front().shape()) throw ShapeError("stack: tensors differ in shape");
    std::copy(parts[b].data().begin(), parts[b].data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(b * each));
  }
  return out;
}

Tensor unstack(const Tensor& batch, std::size_t b) {
  if (batch.rank() == 0 || b >= batch.dim(0)) throw ShapeError("unstack: index out of range");
  const Shape shape(batch.shape().begin() + 1, batch.shape().end());
  Tensor out(shape);
  const std::size_t each = out.size();
  std::copy_n(batch.data().begin() + static_cast<std::ptrdiff_t>(b * each), each, out.data().begin());
  return out;
}

namespace {

Tensor floor_tensor(const Tensor& t) {
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::floor(t[i]);
  return out;
}

void check_single(const FlowModel& model, std::string_view op, const Tensor& t, const Shape& expected) {
  if (t.shape() != expected) {
    throw ShapeError(std::string(op) + ": expected shape " + shape_string(expected) + " for spec '" +
                     model.spec().name() + "', got " + shape_string(t.shape()));
  }
}

Shape adjacency_shape(const GraphSpec& s) { return {s.num_nodes(), s.num_nodes(), s.num_bond_types()}; }
Shape feature_shape(const GraphSpec& s) { return {s.num_nodes(), s.num_atom_types()}; }

// One-hot adjacency of the argmax discretization, per batch entry.
Tensor discrete_adjacency_batch(const GraphSpec& spec, const Tensor& a_cont) {
  const std::size_t batch = a_cont.dim(0);
  std::vector<Tensor> parts;
  parts.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::vector<std::uint8_t> bonds = discretize_adjacency(unstack(a_cont, b));
    parts.push_back(one_hot_adjacency(bonds, spec.num_nodes(), spec.num_bond_types()));
  }
  return stack(parts);
}

}  // namespace

LayerResult adj_coupling_forward(const FlowModel& model, std::size_t layer, const Tensor& z_a) {
  const GraphSpec& spec = model.spec();
  check_single(model, "adj_coupling_forward", z_a, adjacency_shape(spec));
  ad::Tape tape(false);
  const NetContext ctx{tape, model.params(), model.buffers()};
  const std::size_t n = spec.num_nodes(), r = spec.num_bond_types();
  ad::Var logdet = tape.constant(Tensor(Shape{1}));
  const ad::Var out =
      model.adjacency_layer_forward(ctx, layer, tape.constant(z_a.reshaped(Shape{1, n, n * r})), &logdet);
  return {out.value().reshaped(z_a.shape()), logdet.value()[0]};
}

Tensor adj_coupling_inverse(const FlowModel& model, std::size_t layer, const Tensor& z_a) {
  const GraphSpec& spec = model.spec();
  check_single(model, "adj_coupling_inverse", z_a, adjacency_shape(spec));
  ad::Tape tape(false);
  const NetContext ctx{tape, model.params(), model.buffers()};
  const std::size_t n = spec.num_nodes(), r = spec.num_bond_types();
  const ad::Var out = model.adjacency_layer_inverse(ctx, layer, tape.constant(z_a.reshaped(Shape{1, n, n * r})));
  return out.value().reshaped(z_a.shape());
}

LayerResult node_coupling_forward(const FlowModel& model, std::size_t layer, const Tensor& z_x,
                                  const Tensor& adjacency) {
  const GraphSpec& spec = model.spec();
  check_single(model, "node_coupling_forward", z_x, feature_shape(spec));
  check_single(model, "node_coupling_forward", adjacency, adjacency_shape(spec));
  ad::Tape tape(false);
  const NetContext ctx{tape, model.params(), model.buffers()};
  const Tensor a = adjacency.reshaped(Shape{1, spec.num_nodes(), spec.num_nodes(), spec.num_bond_types()});
  const std::vector<ad::Var> rel = model.relation_inputs(tape, a);
  const Shape batched{1, spec.num_nodes(), spec.num_atom_types()};
  const ad::Var out = model.node_layer_forward(ctx, layer, tape.constant(z_x.reshaped(batched)), rel);
  return {out.value().reshaped(z_x.shape()), 0};
}

Tensor node_coupling_inverse(const FlowModel& model, std::size_t layer, const Tensor& z_x, const Tensor& adjacency) {
  const GraphSpec& spec = model.spec();
  check_single(model, "node_coupling_inverse", z_x, feature_shape(spec));
  check_single(model, "node_coupling_inverse", adjacency, adjacency_shape(spec));
  ad::Tape tape(false);
  const NetContext ctx{tape, model.params(), model.buffers()};
  const Tensor a = adjacency.reshaped(Shape{1, spec.num_nodes(), spec.num_nodes(), spec.num_bond_types()});
  const std::vector<ad::Var> rel = model.relation_inputs(tape, a);
  const Shape batched{1, spec.num_nodes(), spec.num_atom_types()};
  const ad::Var out = model.node_layer_inverse(ctx, layer, tape.constant(z_x.reshaped(batched)), rel);
  return out.value().reshaped(z_x.shape());
}

std::pair<Tensor, Tensor> forward_batch(const FlowModel& model, const Tensor& adjacency, const Tensor& features) {
  ad::Tape tape(false);
  const NetContext ctx{tape, model.params(), model.buffers()};
  const FlowOutput out = model.forward(ctx, adjacency, features, floor_tensor(adjacency));
  return {out.z.value(), out.logdet.value()};
}

std::pair<Tensor, Tensor> inverse_batch(const FlowModel& model, const Tensor& z, InverseOrder order) {
  const GraphSpec& spec = model.spec();
  const std::size_t n = spec.num_nodes(), m = spec.num_atom_types(), r = spec.num_bond_types();
  const std::size_t d_a = n * n * r;
  if (z.rank() != 2 || z.dim(1) != model.latent_dim()) {
    throw ShapeError("inverse_batch: expected [B," + std::to_string(model.latent_dim()) + "], got " +
                     shape_string(z.shape()));
  }
  const std::size_t batch = z.dim(0);
  Tensor z_a0(Shape{batch, n, n * r});
  Tensor z_x0(Shape{batch, n, m});
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(z.data().begin() + static_cast<std::ptrdiff_t>(b * z.dim(1)), d_a,
                z_a0.data().begin() + static_cast<std::ptrdiff_t>(b * d_a));
    std::copy_n(z.data().begin() + static_cast<std::ptrdiff_t>(b * z.dim(1) + d_a), n * m,
                z_x0.data().begin() + static_cast<std::ptrdiff_t>(b * n * m));
  }
  ad::Tape tape(false);
  const NetContext ctx{tape, model.params(), model.buffers()};
  const std::size_t la = model.config().adjacency_layers, lx = model.config().node_layers;

  auto invert_adjacency = [&]() {
    ad::Var z_a = tape.constant(z_a0);
    for (std::size_t k = la; k-- > 0;) z_a = model.adjacency_layer_inverse(ctx, k, z_a);
    return z_a.value().reshaped(Shape{batch, n, n, r});
  };
  auto invert_nodes = [&](const Tensor& a_cont) {
    const std::vector<ad::Var> rel = model.relation_inputs(tape, discrete_adjacency_batch(spec, a_cont));
    ad::Var z_x = tape.constant(z_x0);
    for (std::size_t k = lx; k-- > 0;) z_x = model.node_layer_inverse(ctx, k, z_x, rel);
    return z_x.value();
  };

  if (order == InverseOrder::kAdjacencyFirst) {
    Tensor a = invert_adjacency();
    Tensor x = invert_nodes(a);
    return {std::move(a), std::move(x)};
  }
  Tensor x = invert_nodes(z_a0.reshaped(Shape{batch, n, n, r}));
  Tensor a = invert_adjacency();
  return {std::move(a), std::move(x)};
}

LatentPoint model_forward(const FlowModel& model, const DequantizedGraph& g) {
  const GraphSpec& spec = model.spec();
  check_single(model, "model_forward", g.adjacency, adjacency_shape(spec));
  check_single(model, "model_forward", g.features, feature_shape(spec));
  Shape a_shape = g.adjacency.shape(), x_shape = g.features.shape();
  a_shape.insert(a_shape.begin(), 1);
  x_shape.insert(x_shape.begin(), 1);
  auto [z, logdet] = forward_batch(model, g.adjacency.reshaped(a_shape), g.features.reshaped(x_shape));
  return {z.reshaped(Shape{model.latent_dim()}), logdet[0]};
}

Reconstruction model_inverse(const FlowModel& model, const Tensor& z, InverseOrder order) {
  if (z.rank() != 1 || z.size() != model.latent_dim()) {
    throw ShapeError("model_inverse: expected latent of dimension " + std::to_string(model.latent_dim()) +
                     ", got shape " + shape_string(z.shape()));
  }
  auto [a, x] = inverse_batch(model, z.reshaped(Shape{1, z.size()}), order);
  return {unstack(a, 0), unstack(x, 0)};
}

Real prior_logprob(Real log_sigma, const Tensor& z) {
  const Real half_log_2pi = Real(0.5) * std::log(2 * std::numbers::pi_v<Real>);
  const Real inv_var = std::exp(-2 * log_sigma);
  Real sum_sq = 0;
  for (Real v : z.data()) sum_sq += v * v;
  return -static_cast<Real>(z.size()) * (half_log_2pi + log_sigma) - Real(0.5) * inv_var * sum_sq;
}

ad::Var prior_logprob(ad::Var log_sigma, ad::Var z) {
  if (z.shape().size() != 2 || !log_sigma.shape().empty()) {
    throw ShapeError("prior_logprob: expected z [B, D] and a scalar log_sigma, got " + shape_string(z.shape()) +
                     " and " + shape_string(log_sigma.shape()));
  }
  const Real d = static_cast<Real>(z.shape()[1]);
  const Real half_log_2pi = Real(0.5) * std::log(2 * std::numbers::pi_v<Real>);
  const ad::Var sum_sq = ad::sum(ad::square(z), ad::Axis{1});
  const ad::Var inv_var = ad::exp(ad::scale(log_sigma, -2));
  const ad::Var quad = ad::scale(ad::mul(sum_sq, inv_var), Real(-0.5));
  return ad::add(quad, ad::add_scalar(ad::scale(log_sigma, -d), -d * half_log_2pi));
}

void randomize_parameters(FlowModel& model, Rng& rng, Real scale) {
  ParameterSet& params = model.params();
  for (const std::string& name : params.names()) {
    Tensor& p = params.get(name);
    const Real sd = p.rank() == 2 ? scale / std::sqrt(static_cast<Real>(p.dim(0))) : scale;
    for (Real& v : p.data()) v += sd * rng.normal();
  }
}

}  // namespace gnvp
