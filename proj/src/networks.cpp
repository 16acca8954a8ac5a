// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnvp/networks.hpp"

#include <cmath>

#include "gnvp/error.hpp"

namespace gnvp {

Tensor& ParameterSet::add(std::string name, Tensor value) {
  if (index_.count(name) != 0) throw InvalidArgument("ParameterSet: duplicate name '" + name + "'");
  index_.emplace(name, values_.size());
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.back();
}

bool ParameterSet::contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }

const Tensor& ParameterSet::get(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) throw InvalidArgument("ParameterSet: no tensor named '" + std::string(name) + "'");
  return values_[it->second];
}

Tensor& ParameterSet::get(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ParameterSet&>(*this).get(name));
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const Tensor& t : values_) n += t.size();
  return n;
}

bool operator==(const ParameterSet& a, const ParameterSet& b) { return a.names_ == b.names_ && a.values_ == b.values_; }

void init_batch_norm(ParameterSet& params, ParameterSet& buffers, const std::string& prefix, std::size_t features) {
  params.add(prefix + ".gamma", Tensor(Shape{features}, Real(1)));
  params.add(prefix + ".beta", Tensor(Shape{features}, Real(0)));
  buffers.add(prefix + ".mean", Tensor(Shape{features}, Real(0)));
  buffers.add(prefix + ".var", Tensor(Shape{features}, Real(1)));
}

ad::Var batch_norm(const NetContext& ctx, const std::string& prefix, ad::Var x) {
  ad::Var normalized;
  if (ctx.mode == NormMode::kBatch) {
    const ad::Var mu = ad::mean(x, ad::Axis{0});
    const ad::Var centered = ad::sub(x, mu);
    const ad::Var var = ad::mean(ad::square(centered), ad::Axis{0});
    normalized = ad::mul(centered, ad::pow(ad::add_scalar(var, kBatchNormEps), Real(-0.5)));
    if (ctx.stats != nullptr) (*ctx.stats)[prefix] = {mu.value(), var.value()};
  } else {
    const Tensor& mean = ctx.buffers.get(prefix + ".mean");
    const Tensor& var = ctx.buffers.get(prefix + ".var");
    Tensor inv_std(var.shape());
    for (std::size_t i = 0; i < var.size(); ++i) inv_std[i] = Real(1) / std::sqrt(var[i] + kBatchNormEps);
    normalized = ad::mul(ad::sub(x, ctx.tape.constant(mean)), ctx.tape.constant(std::move(inv_std)));
  }
  return ad::add(ad::mul(normalized, ctx.param(prefix + ".gamma")), ctx.param(prefix + ".beta"));
}

void update_running_statistics(ParameterSet& buffers, const BatchStatistics& stats) {
  for (const auto& [prefix, mv] : stats) {
    Tensor& mean = buffers.get(prefix + ".mean");
    Tensor& var = buffers.get(prefix + ".var");
    for (std::size_t i = 0; i < mean.size(); ++i) {
      mean[i] = (Real(1) - kBatchNormMomentum) * mean[i] + kBatchNormMomentum * mv.first[i];
      var[i] = (Real(1) - kBatchNormMomentum) * var[i] + kBatchNormMomentum * mv.second[i];
    }
  }
}

namespace {

// [rows, cols] with entries ~ N(0, 1/fan_in).
Tensor lecun_normal(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  Tensor w(Shape{rows, cols});
  const Real sd = Real(1) / std::sqrt(static_cast<Real>(fan_in == 0 ? 1 : fan_in));
  for (Real& v : w.data()) v = sd * rng.normal();
  return w;
}

}  // namespace

MlpNet::MlpNet(std::string prefix, std::size_t in, std::vector<std::size_t> hidden, std::size_t out, bool batch_norm)
    : prefix_(std::move(prefix)), in_(in), hidden_(std::move(hidden)), out_(out), batch_norm_(batch_norm) {}

void MlpNet::init(ParameterSet& params, ParameterSet& buffers, Rng& rng) const {
  std::size_t width = in_;
  for (std::size_t l = 0; l < hidden_.size(); ++l) {
    const std::string name = prefix_ + ".l" + std::to_string(l);
    params.add(name + ".w", lecun_normal(width, hidden_[l], width, rng));
    params.add(name + ".b", Tensor(Shape{hidden_[l]}));
    if (batch_norm_) init_batch_norm(params, buffers, name + ".bn", hidden_[l]);
    width = hidden_[l];
  }
  params.add(head_weight(), Tensor(Shape{width, out_}));
  params.add(head_bias(), Tensor(Shape{out_}));
}

ad::Var MlpNet::forward(const NetContext& ctx, ad::Var x) const {
  ad::Var h = x;
  for (std::size_t l = 0; l < hidden_.size(); ++l) {
    const std::string name = prefix_ + ".l" + std::to_string(l);
    h = ad::add(ad::matmul(h, ctx.param(name + ".w")), ctx.param(name + ".b"));
    if (batch_norm_) h = batch_norm(ctx, name + ".bn", h);
    h = ad::relu(h);
  }
  return ad::add(ad::matmul(h, ctx.param(head_weight())), ctx.param(head_bias()));
}

RelGcnNet::RelGcnNet(std::string prefix, std::size_t relations, std::size_t in, std::size_t hidden,
                     std::size_t rounds, std::size_t out, bool batch_norm)
    : prefix_(std::move(prefix)),
      relations_(relations),
      in_(in),
      hidden_(hidden),
      rounds_(rounds),
      out_(out),
      batch_norm_(batch_norm) {}

void RelGcnNet::init(ParameterSet& params, ParameterSet& buffers, Rng& rng) const {
  std::size_t width = in_;
  for (std::size_t k = 0; k < rounds_; ++k) {
    const std::string name = prefix_ + ".r" + std::to_string(k);
    // Fan-in counts every relation plus the self term.
    const std::size_t fan_in = width * (relations_ + 1);
    for (std::size_t r = 0; r < relations_; ++r) {
      params.add(name + ".rel" + std::to_string(r), lecun_normal(width, hidden_, fan_in, rng));
    }
    params.add(name + ".self", lecun_normal(width, hidden_, fan_in, rng));
    params.add(name + ".b", Tensor(Shape{hidden_}));
    if (batch_norm_) init_batch_norm(params, buffers, name + ".bn", hidden_);
    width = hidden_;
  }
  params.add(head_weight(), Tensor(Shape{width, out_}));
  params.add(head_bias(), Tensor(Shape{out_}));
}

ad::Var RelGcnNet::forward(const NetContext& ctx, ad::Var h, std::span<const ad::Var> relations,
                           std::size_t target) const {
  if (relations.size() != relations_) throw ShapeError("RelGcnNet: expected one adjacency matrix per relation");
  const std::size_t batch = h.shape().at(0);
  const std::size_t nodes = h.shape().at(1);
  std::size_t width = in_;
  for (std::size_t k = 0; k < rounds_; ++k) {
    const std::string name = prefix_ + ".r" + std::to_string(k);
    std::vector<ad::Var> messages;
    std::vector<ad::Var> weights;
    for (std::size_t r = 0; r < relations_; ++r) {
      messages.push_back(ad::bmm(relations[r], h));
      weights.push_back(ctx.param(name + ".rel" + std::to_string(r)));
    }
    messages.push_back(h);
    weights.push_back(ctx.param(name + ".self"));
    const ad::Var stacked = ad::reshape(ad::concat(messages, ad::Axis{2}), Shape{batch * nodes, width * (relations_ + 1)});
    ad::Var pre = ad::add(ad::matmul(stacked, ad::concat(weights, ad::Axis{0})), ctx.param(name + ".b"));
    if (batch_norm_) pre = batch_norm(ctx, name + ".bn", pre);
    h = ad::reshape(ad::tanh(pre), Shape{batch, nodes, hidden_});
    width = hidden_;
  }
  const std::size_t pick[] = {target};
  const ad::Var node = ad::reshape(ad::index_select(h, ad::Axis{1}, pick), Shape{batch, width});
  return ad::add(ad::matmul(node, ctx.param(head_weight())), ctx.param(head_bias()));
}

}  // namespace gnvp
