// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "gnvp/chem.hpp"
#include "gnvp/flow.hpp"
#include "gnvp/graph.hpp"
#include "gnvp/rng.hpp"

namespace gnvp {

struct SampleConfig {
  std::size_t num_samples = 1000;
  Real temperature = Real(0.85);
  std::uint64_t seed = 0;

  /// T = 0.85 for qm9lite, 0.75 for zinclite.
  static SampleConfig for_spec(const GraphSpec& spec);
  void validate() const;
};

/// z ~ N(0, (T sigma)^2 I), drawn as T * sigma * standard normal so T = 0 gives z = 0.
Tensor sample_latent(Real log_sigma, std::size_t dim, Real temperature, Rng& rng);

struct GeneratedSample {
  MolecularGraph graph;
  Molecule molecule;
  bool valid = false;
  /// Canonical SMILES of valid samples, empty otherwise.
  std::string canonical;
};

/// Classifies a discrete graph (validity and canonical key).
GeneratedSample make_sample(const MolecularGraph& graph, const GraphSpec& spec);

/// Inverse map plus argmax discretization for each latent [D].
std::vector<GeneratedSample> decode_latents(const FlowModel& model, std::span<const Tensor> latents);

/// Sample i uses the stream Rng(seed).split(i), so output is independent of
/// the worker count.
std::vector<GeneratedSample> generate(const FlowModel& model, const SampleConfig& config);

/// Canonical keys of a training set, computed once.
struct ReferenceSet {
  std::vector<MolecularGraph> graphs;
  std::unordered_set<std::string> canonical;

  static ReferenceSet build(std::span<const MolecularGraph> graphs, const GraphSpec& spec);
};

struct MetricsReport {
  double validity = 0;
  double novelty = 0;
  double uniqueness = 0;
  double reconstruction = 0;
  std::size_t total = 0;
  std::size_t valid = 0;
  std::size_t novel = 0;
  std::size_t unique = 0;
  std::size_t reconstructed = 0;
  std::size_t reconstruction_total = 0;
  std::uint64_t seed = 0;
};

/// V = valid/total, N = novel valid/valid, U = distinct valid/valid (all in
/// percent; N and U are 0 when nothing is valid). Fills only those fields.
MetricsReport generation_metrics(std::span<const GeneratedSample> generated, const ReferenceSet& reference);

struct ReconstructionCount {
  std::size_t matched = 0;
  std::size_t total = 0;
};

/// Counts graphs with requantize(model_inverse(model_forward(dequantize(g)))) == g.
/// Graph i is dequantized with Rng(seed).split(i).
ReconstructionCount reconstruction_count(const FlowModel& model, std::span<const MolecularGraph> graphs,
                                         std::uint64_t seed, Real c = kDefaultDequantScale);

/// Generation metrics plus R over the reference graphs. Throws
/// InvalidArgument when `generated` is empty.
MetricsReport compute_metrics(std::span<const GeneratedSample> generated, const ReferenceSet& reference,
                              const FlowModel& model, std::uint64_t seed);

struct SweepRow {
  Real temperature = 0;
  double validity = 0;
  double novelty = 0;
  double uniqueness = 0;
  double reconstruction = 0;
  std::size_t seed_count = 0;
};

inline constexpr std::size_t kSweepRuns = 5;

/// For each temperature (ascending), generates and scores `runs` times with
/// seeds base.seed + r and averages the percentages.
std::vector<SweepRow> temperature_sweep(const FlowModel& model, std::span<const Real> temperatures,
                                        const SampleConfig& base, const ReferenceSet& reference,
                                        std::size_t runs = kSweepRuns);

std::string metrics_csv_header();
std::string metrics_csv_row(Real temperature, const MetricsReport& r, std::size_t seed_count);
std::string sweep_csv(std::span<const SweepRow> rows);

/// One line per sample: canonical SMILES, or "# invalid <raw>" for failures.
std::string format_generated(std::span<const GeneratedSample> samples);

}  // namespace gnvp
