// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gnvp/autodiff.hpp"
#include "gnvp/flow.hpp"
#include "gnvp/graph.hpp"
#include "gnvp/networks.hpp"
#include "gnvp/rng.hpp"

namespace gnvp {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 256;
  Real adam_alpha = Real(1e-3);
  Real adam_beta1 = Real(0.9);
  Real adam_beta2 = Real(0.999);
  Real adam_eps = Real(1e-8);
  std::uint64_t seed = 0;
  Real dequant_c = kDefaultDequantScale;
  /// Write a resumable snapshot every this many epochs; 0 writes only the final model.
  std::size_t checkpoint_every = 0;

  /// Batch size 256 for qm9lite, 128 for zinclite.
  static TrainConfig for_spec(const GraphSpec& spec);

  /// Throws InvalidArgument on non-positive sizes/rates or c outside (0,1).
  void validate() const;

  /// Applies `key = value` lines (field names as above, '#' comments) on top of `base`.
  static TrainConfig parse(std::string_view text, TrainConfig base);
  static TrainConfig load(const std::filesystem::path& path, TrainConfig base);
  std::string to_text() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct AdamState {
  ParameterSet m;
  ParameterSet v;
  std::uint64_t step = 0;

  /// Zero moments shaped like `params`.
  static AdamState zeros_like(const ParameterSet& params);
};

struct TrainState {
  FlowModel model;
  AdamState adam;
  std::size_t epoch = 0;  ///< completed epochs
};

TrainState fresh_train_state(FlowModel model);

/// Mean over the batch of -prior_logprob(z) - logdet, as a rank-0 tape value.
/// The constant -D log c dequantization term is not included.
ad::Var nll_loss(const NetContext& ctx, const FlowModel& model, std::span<const DequantizedGraph> batch);
/// Dequantizes each graph with fresh noise drawn in batch order, then as above.
ad::Var nll_loss(const NetContext& ctx, const FlowModel& model, std::span<const MolecularGraph> batch, Rng& rng,
                 Real c = kDefaultDequantScale);

/// Loss value on fixed inputs using frozen batch-norm statistics.
Real evaluate_nll(const FlowModel& model, std::span<const DequantizedGraph> batch);

/// One bias-corrected Adam update. Parameters absent from `grads` see a zero
/// gradient. Throws ShapeError / InvalidArgument on mismatched gradients.
void adam_step(ParameterSet& params, AdamState& adam, const ad::Gradients& grads, const TrainConfig& config);

struct EpochMetrics {
  std::size_t epoch = 0;  ///< 1-based
  Real mean_nll = 0;
  Real sigma = 0;
  double wall_seconds = 0;
};

struct TrainOptions {
  /// Metrics CSV path; empty disables.
  std::filesystem::path metrics_path;
  /// Directory for snapshots and the final model; empty disables.
  std::filesystem::path checkpoint_dir;
  std::function<void(const EpochMetrics&)> on_epoch;
};

/// '#' line opening the metrics CSV; records the omitted -D log c term.
std::string metrics_header_comment(std::size_t latent_dim, Real c);

/// Runs epochs state.epoch+1 .. config.epochs. Each epoch shuffles with a
/// seeded stream and draws fresh dequantization noise per visit. Throws
/// NumericError naming the epoch and batch when the loss is not finite.
std::vector<EpochMetrics> train(TrainState& state, std::span<const MolecularGraph> dataset, const TrainConfig& config,
                                const TrainOptions& options = {});

/// Deterministic (train, held-out) index split by a seeded shuffle.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t count, std::uint64_t seed,
                                                                            Real train_fraction = Real(0.9));

void save_train_state(const TrainState& state, const std::filesystem::path& path);
TrainState load_train_state(const std::filesystem::path& path, const GraphSpec& expected);

}  // namespace gnvp
