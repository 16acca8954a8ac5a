// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Latent-space tools: encoding, 2-D neighbourhood grids, proxy properties,
// and a linear property regressor used to walk the latent space.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gnvp/chem.hpp"
#include "gnvp/flow.hpp"
#include "gnvp/generation.hpp"
#include "gnvp/graph.hpp"
#include "gnvp/rng.hpp"

namespace gnvp {

/// Dequantizes with `rng`, or with the midpoint offset c/2 when rng is null,
/// then applies the forward map.
LatentPoint encode(const FlowModel& model, const MolecularGraph& g, Rng* rng = nullptr,
                   Real c = kDefaultDequantScale);

/// Inverse map followed by argmax discretization.
GeneratedSample decode(const FlowModel& model, const Tensor& z);

struct GridSpec {
  Tensor center;  ///< latent of the centre molecule [D]
  Tensor axis_u;  ///< unit vector [D]
  Tensor axis_v;  ///< unit vector orthogonal to axis_u
  std::size_t extent = 0;
  Real step = 1;

  /// Axes from seeded Gaussian draws, orthonormalized by Gram-Schmidt.
  static GridSpec random(const FlowModel& model, const MolecularGraph& center, std::size_t extent, Real step,
                         std::uint64_t seed);
};

struct GridCell {
  long i = 0;
  long j = 0;
  GeneratedSample sample;
};

/// Decodes z0 + i*step*u + j*step*v once for every i, j in [-extent, extent],
/// row-major in i then j.
std::vector<GridCell> grid_decode(const FlowModel& model, const GridSpec& spec);
/// CSV "i,j,smiles" with INVALID for failed cells.
std::string grid_csv(std::span<const GridCell> cells);

/// heavy_atom_count, ring_count, hetero_fraction, logp_proxy.
const std::vector<std::string>& property_names();
/// Throws InvalidArgument for an unknown name and DataError for an invalid molecule.
Real compute_property(const Molecule& m, std::string_view name);
/// Per-atom contribution table behind logp_proxy.
Real logp_contribution(std::string_view symbol);

struct PropertyRegressor {
  std::string property;
  Tensor weights;  ///< [D]
  Real bias = 0;
  Real r_squared = 0;
  /// True when the least-squares design was rank deficient and the ridge
  /// solution (lambda = 1e-6) was used instead.
  bool ridge = false;
  std::size_t samples = 0;

  Real predict(const Tensor& z) const;
};

inline constexpr Real kRidgeLambda = Real(1e-6);

/// Least squares of `values` on `latents` with an intercept. Throws
/// InvalidArgument when fewer than two distinct values are given.
PropertyRegressor fit_regressor(std::span<const Tensor> latents, std::span<const Real> values, std::string property);
/// Noise-free encodings of `dataset` regressed on the named property.
PropertyRegressor fit_regressor(const FlowModel& model, std::span<const MolecularGraph> dataset,
                                std::string_view property);

struct OptimizationStep {
  std::size_t step = 0;
  GeneratedSample sample;
  Real predicted = 0;
  std::optional<Real> realized;
};

/// z_k = z_0 + k * step_size * w / |w| for k = 0..num_steps, each decoded once.
std::vector<OptimizationStep> optimize_along(const FlowModel& model, const PropertyRegressor& regressor,
                                             const MolecularGraph& seed, std::size_t num_steps, Real step_size);
/// CSV "step,smiles,predicted,realized" with INVALID / NA for failed decodes.
std::string optimization_csv(std::span<const OptimizationStep> steps);

}  // namespace gnvp
