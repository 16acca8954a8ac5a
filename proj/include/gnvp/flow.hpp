// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// The invertible map from a dequantized graph (A', X') to a latent vector
// z = concat(flatten(z_A), flatten(z_X)).
//
// Forward: node-feature coupling layers run first over X', each conditioned
// on the discrete adjacency floor(A'); then adjacency coupling layers run
// over A'. Layer k of either stack updates node (k mod N).
//
// Inverse: adjacency layers in reverse order, argmax discretization of the
// recovered adjacency, then node layers in reverse order conditioned on it.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gnvp/autodiff.hpp"
#include "gnvp/graph.hpp"
#include "gnvp/networks.hpp"
#include "gnvp/rng.hpp"
#include "gnvp/tensor.hpp"

namespace gnvp {

struct FlowConfig {
  std::size_t adjacency_layers = 0;
  std::size_t node_layers = 0;
  std::size_t mlp_hidden = 128;
  std::size_t mlp_depth = 2;
  std::size_t gcn_hidden = 64;
  std::size_t gcn_rounds = 2;
  bool batch_norm = true;
  /// s = clamp * tanh(raw / clamp).
  Real scale_clamp = 5;

  /// 27/36 layers for qm9lite, 38/38 for zinclite, N/N otherwise.
  static FlowConfig for_spec(const GraphSpec& spec);

  friend bool operator==(const FlowConfig&, const FlowConfig&) = default;
};

/// Batched tape output: z [B, D] and per-graph log-determinant [B].
struct FlowOutput {
  ad::Var z;
  ad::Var logdet;
};

class FlowModel {
 public:
  /// Initializes every conditioner (zero output heads) and log_sigma = 0.
  FlowModel(GraphSpec spec, FlowConfig config, std::uint64_t seed);

  const GraphSpec& spec() const noexcept { return spec_; }
  const FlowConfig& config() const noexcept { return config_; }
  ParameterSet& params() noexcept { return params_; }
  const ParameterSet& params() const noexcept { return params_; }
  ParameterSet& buffers() noexcept { return buffers_; }
  const ParameterSet& buffers() const noexcept { return buffers_; }

  std::size_t latent_dim() const noexcept { return spec_.latent_dim(); }
  std::size_t adjacency_target(std::size_t layer) const noexcept { return layer % spec_.num_nodes(); }
  std::size_t node_target(std::size_t layer) const noexcept { return layer % spec_.num_nodes(); }

  const MlpNet& scale_net(std::size_t layer) const { return adj_s_.at(layer); }
  const MlpNet& translate_net(std::size_t layer) const { return adj_t_.at(layer); }
  const RelGcnNet& node_net(std::size_t layer) const { return node_t_.at(layer); }

  static constexpr const char* kLogSigma = "prior.log_sigma";
  Real log_sigma() const { return params_.get(kLogSigma).item(); }

  /// adjacency [B,N,N,R], features [B,N,M], discrete one-hot adjacency
  /// [B,N,N,R] that conditions the node layers.
  FlowOutput forward(const NetContext& ctx, const Tensor& adjacency, const Tensor& features,
                     const Tensor& discrete) const;

  /// z_a is [B, N, N*R]. Adds the layer's log-determinant [B] into *logdet.
  ad::Var adjacency_layer_forward(const NetContext& ctx, std::size_t layer, ad::Var z_a, ad::Var* logdet) const;
  ad::Var adjacency_layer_inverse(const NetContext& ctx, std::size_t layer, ad::Var z_a) const;
  /// z_x is [B, N, M]; relations from relation_inputs().
  ad::Var node_layer_forward(const NetContext& ctx, std::size_t layer, ad::Var z_x,
                             std::span<const ad::Var> relations) const;
  ad::Var node_layer_inverse(const NetContext& ctx, std::size_t layer, ad::Var z_x,
                             std::span<const ad::Var> relations) const;

  /// One [B, N, N] constant per bond channel of a one-hot [B, N, N, R] tensor.
  std::vector<ad::Var> relation_inputs(ad::Tape& tape, const Tensor& discrete) const;

 private:
  std::pair<ad::Var, ad::Var> scale_and_shift(const NetContext& ctx, std::size_t layer, ad::Var z_a) const;

  GraphSpec spec_;
  FlowConfig config_;
  ParameterSet params_;
  ParameterSet buffers_;
  std::vector<MlpNet> adj_s_;
  std::vector<MlpNet> adj_t_;
  std::vector<RelGcnNet> node_t_;
};

/// Single-layer result on one graph.
struct LayerResult {
  Tensor output;
  Real logdet = 0;
};

/// z plus the total log-determinant of the forward map.
struct LatentPoint {
  Tensor z;  ///< [D]
  Real logdet = 0;
};

/// Continuous output of the inverse map.
struct Reconstruction {
  Tensor adjacency;  ///< [N, N, R]
  Tensor features;   ///< [N, M]
};

enum class InverseOrder {
  kAdjacencyFirst,
  /// Node layers first, conditioned on the argmax of the adjacency latent.
  /// Exists only to show that the stage order matters.
  kNodeFirst,
};

// Single-graph operations evaluate with frozen batch-norm statistics.

LayerResult adj_coupling_forward(const FlowModel& model, std::size_t layer, const Tensor& z_a);
Tensor adj_coupling_inverse(const FlowModel& model, std::size_t layer, const Tensor& z_a);
LayerResult node_coupling_forward(const FlowModel& model, std::size_t layer, const Tensor& z_x,
                                  const Tensor& adjacency);
Tensor node_coupling_inverse(const FlowModel& model, std::size_t layer, const Tensor& z_x, const Tensor& adjacency);

LatentPoint model_forward(const FlowModel& model, const DequantizedGraph& g);
Reconstruction model_inverse(const FlowModel& model, const Tensor& z, InverseOrder order = InverseOrder::kAdjacencyFirst);

/// Batched forms: adjacency [B,N,N,R], features [B,N,M] -> (z [B,D], logdet [B]);
/// z [B,D] -> (adjacency [B,N,N,R], features [B,N,M]).
std::pair<Tensor, Tensor> forward_batch(const FlowModel& model, const Tensor& adjacency, const Tensor& features);
std::pair<Tensor, Tensor> inverse_batch(const FlowModel& model, const Tensor& z,
                                        InverseOrder order = InverseOrder::kAdjacencyFirst);

/// Stacks graphs into [B, ...] tensors.
Tensor stack(std::span<const Tensor> parts);
/// Slice b of a [B, ...] tensor.
Tensor unstack(const Tensor& batch, std::size_t b);

/// sum_i [-log(2 pi)/2 - log sigma - z_i^2 / (2 sigma^2)].
Real prior_logprob(Real log_sigma, const Tensor& z);
/// Row-wise prior log-density of z [B, D]; result [B].
ad::Var prior_logprob(ad::Var log_sigma, ad::Var z);

/// Adds scale * N(0,1) to every vector parameter and scale * N(0,1/fan_in) to
/// every weight matrix [fan_in, fan_out] (test fixtures for non-trivial maps).
void randomize_parameters(FlowModel& model, Rng& rng, Real scale);

}  // namespace gnvp
