// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Conditioner networks for the coupling layers: an MLP over the flattened
// masked adjacency tensor and a relational graph convolution over the masked
// node features. Both end in a zero-initialized linear head.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gnvp/autodiff.hpp"
#include "gnvp/rng.hpp"
#include "gnvp/tensor.hpp"

namespace gnvp {

/// Ordered set of named tensors.
class ParameterSet {
 public:
  Tensor& add(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  const Tensor& get(std::string_view name) const;
  Tensor& get(std::string_view name);

  /// Names in insertion order.
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  /// Total number of scalars.
  std::size_t scalar_count() const;

  friend bool operator==(const ParameterSet& a, const ParameterSet& b);

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Batch-norm statistics source: batch statistics while training, frozen
/// running statistics at evaluation and generation time.
enum class NormMode { kBatch, kRunning };

/// Per-layer (mean, biased variance) observed in kBatch mode, keyed by the
/// norm's buffer prefix.
using BatchStatistics = std::map<std::string, std::pair<Tensor, Tensor>>;

struct NetContext {
  ad::Tape& tape;
  const ParameterSet& params;
  const ParameterSet& buffers;
  NormMode mode = NormMode::kRunning;
  BatchStatistics* stats = nullptr;

  ad::Var param(std::string_view name) const { return tape.parameter(name, params.get(name)); }
};

inline constexpr Real kBatchNormEps = Real(1e-5);
inline constexpr Real kBatchNormMomentum = Real(0.1);

/// Feature-wise batch norm over the leading axis of a [rows, K] input.
ad::Var batch_norm(const NetContext& ctx, const std::string& prefix, ad::Var x);
void init_batch_norm(ParameterSet& params, ParameterSet& buffers, const std::string& prefix, std::size_t features);
/// running <- (1 - momentum) * running + momentum * batch, for every collected entry.
void update_running_statistics(ParameterSet& buffers, const BatchStatistics& stats);

class MlpNet {
 public:
  MlpNet() = default;
  MlpNet(std::string prefix, std::size_t in, std::vector<std::size_t> hidden, std::size_t out, bool batch_norm);

  /// Hidden layers ~ N(0, 1/fan_in), zero biases, zero output head.
  void init(ParameterSet& params, ParameterSet& buffers, Rng& rng) const;
  /// [B, in] -> [B, out]; relu between hidden layers.
  ad::Var forward(const NetContext& ctx, ad::Var x) const;

  const std::string& prefix() const noexcept { return prefix_; }
  std::string head_weight() const { return prefix_ + ".out.w"; }
  std::string head_bias() const { return prefix_ + ".out.b"; }

 private:
  std::string prefix_;
  std::size_t in_ = 0;
  std::vector<std::size_t> hidden_;
  std::size_t out_ = 0;
  bool batch_norm_ = true;
};

/// Relational GCN: each round computes
///   H <- tanh(norm(sum_r A_r H W_r + H W_self + b))
/// with one weight matrix per bond channel (the virtual channel included).
/// The head reads the hidden state of a single target node.
class RelGcnNet {
 public:
  RelGcnNet() = default;
  RelGcnNet(std::string prefix, std::size_t relations, std::size_t in, std::size_t hidden, std::size_t rounds,
            std::size_t out, bool batch_norm);

  void init(ParameterSet& params, ParameterSet& buffers, Rng& rng) const;
  /// h [B, N, in], relations R x [B, N, N] -> [B, out] for node `target`.
  ad::Var forward(const NetContext& ctx, ad::Var h, std::span<const ad::Var> relations, std::size_t target) const;

  const std::string& prefix() const noexcept { return prefix_; }
  std::string head_weight() const { return prefix_ + ".out.w"; }
  std::string head_bias() const { return prefix_ + ".out.b"; }

 private:
  std::string prefix_;
  std::size_t relations_ = 0;
  std::size_t in_ = 0;
  std::size_t hidden_ = 0;
  std::size_t rounds_ = 0;
  std::size_t out_ = 0;
  bool batch_norm_ = true;
};

}  // namespace gnvp
