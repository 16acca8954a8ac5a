// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gnvp/rng.hpp"
#include "gnvp/tensor.hpp"

namespace gnvp {

/// Fixed dimensions of the padded graph encoding. The last entry of each
/// vocabulary is the virtual (padding) symbol. Non-virtual bond channel k
/// encodes bond order k + 1.
class GraphSpec {
 public:
  GraphSpec(std::string name, std::size_t num_nodes, std::vector<std::string> atom_vocab,
            std::vector<std::string> bond_vocab);

  /// N=9 over C, N, O, F with single/double/triple/virtual bonds.
  static GraphSpec qm9lite();
  /// N=38 over C, N, O, F, S, Cl.
  static GraphSpec zinclite();
  /// N=3, one atom type (C), single bonds only: M=2, R=2, D=24.
  static GraphSpec toy();
  /// Resolves "qm9lite" / "zinclite" / "toy".
  static GraphSpec by_name(std::string_view name);

  const std::string& name() const noexcept { return name_; }
  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t num_atom_types() const noexcept { return atom_vocab_.size(); }
  std::size_t num_bond_types() const noexcept { return bond_vocab_.size(); }
  const std::vector<std::string>& atom_vocab() const noexcept { return atom_vocab_; }
  const std::vector<std::string>& bond_vocab() const noexcept { return bond_vocab_; }

  std::size_t virtual_atom() const noexcept { return atom_vocab_.size() - 1; }
  std::size_t virtual_bond() const noexcept { return bond_vocab_.size() - 1; }
  /// Highest representable bond order (R - 1).
  int max_bond_order() const noexcept { return static_cast<int>(bond_vocab_.size()) - 1; }

  std::size_t adjacency_size() const noexcept { return num_nodes_ * num_nodes_ * num_bond_types(); }
  std::size_t feature_size() const noexcept { return num_nodes_ * num_atom_types(); }
  /// Latent dimension D = N*N*R + N*M.
  std::size_t latent_dim() const noexcept { return adjacency_size() + feature_size(); }

  /// Index of `symbol` in the atom vocabulary, or -1.
  int atom_index(std::string_view symbol) const;

  friend bool operator==(const GraphSpec&, const GraphSpec&) = default;

 private:
  std::string name_;
  std::size_t num_nodes_;
  std::vector<std::string> atom_vocab_;
  std::vector<std::string> bond_vocab_;
};

/// Discrete graph G = (A, X), stored as per-node atom-type and per-pair
/// bond-channel indices (the one-hot structure holds by construction).
/// Constructors enforce: symmetric bonds, virtual diagonal, and virtual nodes
/// connected only through the virtual channel.
class MolecularGraph {
 public:
  MolecularGraph(std::size_t num_nodes, std::size_t num_atom_types, std::size_t num_bond_types,
                 std::vector<std::uint8_t> atom_types, std::vector<std::uint8_t> bond_types);

  /// Graph with every node and pair virtual.
  static MolecularGraph empty(const GraphSpec& spec);
  /// From binary one-hot tensors A [N,N,R] and X [N,M]; throws DataError if
  /// any entry is not 0/1 or an invariant fails.
  static MolecularGraph from_tensors(const Tensor& adjacency, const Tensor& features);

  std::size_t num_nodes() const noexcept { return n_; }
  std::size_t num_atom_types() const noexcept { return m_; }
  std::size_t num_bond_types() const noexcept { return r_; }

  std::size_t atom_type(std::size_t i) const { return atoms_[i]; }
  std::size_t bond_type(std::size_t i, std::size_t j) const { return bonds_[i * n_ + j]; }
  bool is_virtual_atom(std::size_t i) const { return atoms_[i] == m_ - 1; }
  bool is_virtual_bond(std::size_t i, std::size_t j) const { return bonds_[i * n_ + j] == r_ - 1; }

  const std::vector<std::uint8_t>& atom_types() const noexcept { return atoms_; }
  const std::vector<std::uint8_t>& bond_types() const noexcept { return bonds_; }

  /// One-hot A with shape [N, N, R].
  Tensor adjacency_tensor() const;
  /// One-hot X with shape [N, M].
  Tensor feature_tensor() const;

  bool matches(const GraphSpec& spec) const noexcept;

  friend bool operator==(const MolecularGraph&, const MolecularGraph&) = default;

 private:
  std::size_t n_, m_, r_;
  std::vector<std::uint8_t> atoms_;
  std::vector<std::uint8_t> bonds_;
};

/// Continuous G' = (A', X') with A' = A + c*u and X' = X + c*u.
struct DequantizedGraph {
  Tensor adjacency;  ///< [N, N, R]
  Tensor features;   ///< [N, M]
  Real scale;        ///< c in (0, 1)
};

/// Default dequantization scale c.
inline constexpr Real kDefaultDequantScale = Real(0.9);

/// Adds c*U[0,1) noise to every entry of A and X (A row-major first, then X).
DequantizedGraph dequantize(const MolecularGraph& g, Real c, Rng& rng);

/// Deterministic variant adding the cell midpoint c/2 instead of noise.
DequantizedGraph dequantize_midpoint(const MolecularGraph& g, Real c);

/// Elementwise floor back to a discrete graph. A slack of 1e-9 absorbs
/// round-off on values reconstructed by the flow. Throws DataError when the
/// floored tensors are not valid one-hot graph encodings.
MolecularGraph requantize(const DequantizedGraph& g);
MolecularGraph requantize(const Tensor& adjacency, const Tensor& features);

/// Bond channel per node pair: scores of (i,j) and (j,i) are averaged, the
/// highest channel wins (ties -> lowest index), and the diagonal is virtual.
/// Returns an N*N row-major channel table.
std::vector<std::uint8_t> discretize_adjacency(const Tensor& a_cont);

/// Node-wise and edge-wise argmax. Bonds touching a node whose argmax is the
/// virtual atom are forced to the virtual channel.
MolecularGraph discretize_argmax(const Tensor& a_cont, const Tensor& x_cont);

/// One-hot [N, N, R] tensor from a channel table.
Tensor one_hot_adjacency(std::span<const std::uint8_t> bond_types, std::size_t num_nodes, std::size_t num_bond_types);

/// Node i of the result is node perm[i] of g. Throws InvalidArgument when perm
/// is not a bijection on {0..N-1}.
MolecularGraph permute_nodes(const MolecularGraph& g, std::span<const std::size_t> perm);

}  // namespace gnvp
