// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnvp/graph.hpp"

#include <algorithm>
#include <cmath>

#include "gnvp/error.hpp"

namespace gnvp {

GraphSpec::GraphSpec(std::string name, std::size_t num_nodes, std::vector<std::string> atom_vocab,
                     std::vector<std::string> bond_vocab)
    : name_(std::move(name)),
      num_nodes_(num_nodes),
      atom_vocab_(std::move(atom_vocab)),
      bond_vocab_(std::move(bond_vocab)) {
  if (num_nodes_ == 0) throw InvalidArgument("GraphSpec: num_nodes must be positive");
  if (atom_vocab_.size() < 2) throw InvalidArgument("GraphSpec: atom vocabulary needs a real and a virtual symbol");
  if (bond_vocab_.size() < 2) throw InvalidArgument("GraphSpec: bond vocabulary needs a real and a virtual channel");
  if (atom_vocab_.size() > 255 || bond_vocab_.size() > 255) throw InvalidArgument("GraphSpec: vocabulary too large");
}

GraphSpec GraphSpec::qm9lite() {
  return GraphSpec("qm9lite", 9, {"C", "N", "O", "F", "*"}, {"single", "double", "triple", "virtual"});
}

GraphSpec GraphSpec::zinclite() {
  return GraphSpec("zinclite", 38, {"C", "N", "O", "F", "S", "Cl", "*"}, {"single", "double", "triple", "virtual"});
}

GraphSpec GraphSpec::toy() { return GraphSpec("toy", 3, {"C", "*"}, {"single", "virtual"}); }

GraphSpec GraphSpec::by_name(std::string_view name) {
  if (name == "qm9lite") return qm9lite();
  if (name == "zinclite") return zinclite();
  if (name == "toy") return toy();
  throw InvalidArgument("unknown graph spec '" + std::string(name) + "' (expected qm9lite, zinclite or toy)");
}

int GraphSpec::atom_index(std::string_view symbol) const {
  for (std::size_t i = 0; i + 1 < atom_vocab_.size(); ++i) {
    if (atom_vocab_[i] == symbol) return static_cast<int>(i);
  }
  return -1;
}

MolecularGraph::MolecularGraph(std::size_t num_nodes, std::size_t num_atom_types, std::size_t num_bond_types,
                               std::vector<std::uint8_t> atom_types, std::vector<std::uint8_t> bond_types)
    : n_(num_nodes), m_(num_atom_types), r_(num_bond_types), atoms_(std::move(atom_types)), bonds_(std::move(bond_types)) {
  if (atoms_.size() != n_ || bonds_.size() != n_ * n_) throw DataError("MolecularGraph: table sizes do not match N");
  const auto vbond = static_cast<std::uint8_t>(r_ - 1);
  for (std::size_t i = 0; i < n_; ++i) {
    if (atoms_[i] >= m_) throw DataError("MolecularGraph: atom type out of range at node " + std::to_string(i));
    if (bonds_[i * n_ + i] != vbond) throw DataError("MolecularGraph: diagonal pair (" + std::to_string(i) + ") is not virtual");
    for (std::size_t j = 0; j < n_; ++j) {
      const std::uint8_t b = bonds_[i * n_ + j];
      if (b >= r_) throw DataError("MolecularGraph: bond channel out of range");
      if (b != bonds_[j * n_ + i]) {
        throw DataError("MolecularGraph: asymmetric pair (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
      if (b != vbond && (atoms_[i] == m_ - 1 || atoms_[j] == m_ - 1)) {
        throw DataError("MolecularGraph: virtual node " + std::to_string(atoms_[i] == m_ - 1 ? i : j) +
                        " carries a real bond");
      }
    }
  }
}

MolecularGraph MolecularGraph::empty(const GraphSpec& spec) {
  const std::size_t n = spec.num_nodes();
  return MolecularGraph(n, spec.num_atom_types(), spec.num_bond_types(),
                        std::vector<std::uint8_t>(n, static_cast<std::uint8_t>(spec.virtual_atom())),
                        std::vector<std::uint8_t>(n * n, static_cast<std::uint8_t>(spec.virtual_bond())));
}

namespace {

// Index of the single 1 in a binary one-hot row.
std::uint8_t one_hot_index(const Real* row, std::size_t width, const char* what, std::size_t where) {
  int hot = -1;
  for (std::size_t k = 0; k < width; ++k) {
    if (row[k] == Real(1)) {
      if (hot >= 0) throw DataError(std::string(what) + " " + std::to_string(where) + " has more than one channel set");
      hot = static_cast<int>(k);
    } else if (row[k] != Real(0)) {
      throw DataError(std::string(what) + " " + std::to_string(where) + " is not binary");
    }
  }
  if (hot < 0) throw DataError(std::string(what) + " " + std::to_string(where) + " has no channel set");
  return static_cast<std::uint8_t>(hot);
}

}  // namespace

MolecularGraph MolecularGraph::from_tensors(const Tensor& adjacency, const Tensor& features) {
  if (adjacency.rank() != 3 || features.rank() != 2 || adjacency.dim(0) != adjacency.dim(1) ||
      adjacency.dim(0) != features.dim(0)) {
    throw ShapeError("MolecularGraph::from_tensors: shapes " + shape_string(adjacency.shape()) + " and " +
                     shape_string(features.shape()));
  }
  const std::size_t n = features.dim(0), m = features.dim(1), r = adjacency.dim(2);
  std::vector<std::uint8_t> atoms(n), bonds(n * n);
  for (std::size_t i = 0; i < n; ++i) atoms[i] = one_hot_index(features.ptr() + i * m, m, "node", i);
  for (std::size_t p = 0; p < n * n; ++p) bonds[p] = one_hot_index(adjacency.ptr() + p * r, r, "pair", p);
  return MolecularGraph(n, m, r, std::move(atoms), std::move(bonds));
}

Tensor MolecularGraph::adjacency_tensor() const {
  Tensor a(Shape{n_, n_, r_});
  for (std::size_t p = 0; p < n_ * n_; ++p) a[p * r_ + bonds_[p]] = Real(1);
  return a;
}

Tensor MolecularGraph::feature_tensor() const {
  Tensor x(Shape{n_, m_});
  for (std::size_t i = 0; i < n_; ++i) x[i * m_ + atoms_[i]] = Real(1);
  return x;
}

bool MolecularGraph::matches(const GraphSpec& spec) const noexcept {
  return n_ == spec.num_nodes() && m_ == spec.num_atom_types() && r_ == spec.num_bond_types();
}

DequantizedGraph dequantize(const MolecularGraph& g, Real c, Rng& rng) {
  if (!(c > Real(0) && c < Real(1))) throw InvalidArgument("dequantize: scale c must lie in (0, 1)");
  DequantizedGraph out{g.adjacency_tensor(), g.feature_tensor(), c};
  for (Real& v : out.adjacency.data()) v += c * rng.uniform();
  for (Real& v : out.features.data()) v += c * rng.uniform();
  return out;
}

DequantizedGraph dequantize_midpoint(const MolecularGraph& g, Real c) {
  if (!(c > Real(0) && c < Real(1))) throw InvalidArgument("dequantize: scale c must lie in (0, 1)");
  DequantizedGraph out{g.adjacency_tensor(), g.feature_tensor(), c};
  for (Real& v : out.adjacency.data()) v += c / Real(2);
  for (Real& v : out.features.data()) v += c / Real(2);
  return out;
}

namespace {

constexpr Real kFloorSlack = Real(1e-9);

Tensor floored(const Tensor& t) {
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Real v = std::floor(t[i] + kFloorSlack);
    if (v != Real(0) && v != Real(1)) {
      throw DataError("requantize: entry " + std::to_string(i) + " = " + std::to_string(t[i]) +
                      " lies outside [0, 2); corrupted dequantized graph");
    }
    out[i] = v;
  }
  return out;
}

}  // namespace

MolecularGraph requantize(const Tensor& adjacency, const Tensor& features) {
  return MolecularGraph::from_tensors(floored(adjacency), floored(features));
}

MolecularGraph requantize(const DequantizedGraph& g) { return requantize(g.adjacency, g.features); }

std::vector<std::uint8_t> discretize_adjacency(const Tensor& a_cont) {
  if (a_cont.rank() != 3 || a_cont.dim(0) != a_cont.dim(1)) {
    throw ShapeError("discretize_adjacency: expected [N,N,R], got " + shape_string(a_cont.shape()));
  }
  const std::size_t n = a_cont.dim(0), r = a_cont.dim(2);
  std::vector<std::uint8_t> bonds(n * n, static_cast<std::uint8_t>(r - 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      std::size_t best = 0;
      Real best_score = 0;
      for (std::size_t k = 0; k < r; ++k) {
        const Real score = (a_cont[(i * n + j) * r + k] + a_cont[(j * n + i) * r + k]) / Real(2);
        if (k == 0 || score > best_score) {
          best = k;
          best_score = score;
        }
      }
      bonds[i * n + j] = bonds[j * n + i] = static_cast<std::uint8_t>(best);
    }
  }
  return bonds;
}

MolecularGraph discretize_argmax(const Tensor& a_cont, const Tensor& x_cont) {
  if (x_cont.rank() != 2 || a_cont.rank() != 3 || a_cont.dim(0) != x_cont.dim(0)) {
    throw ShapeError("discretize_argmax: shapes " + shape_string(a_cont.shape()) + " and " +
                     shape_string(x_cont.shape()));
  }
  const std::size_t n = x_cont.dim(0), m = x_cont.dim(1), r = a_cont.dim(2);
  std::vector<std::uint8_t> atoms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Real* row = x_cont.ptr() + i * m;
    atoms[i] = static_cast<std::uint8_t>(std::max_element(row, row + m) - row);
  }
  std::vector<std::uint8_t> bonds = discretize_adjacency(a_cont);
  const auto vbond = static_cast<std::uint8_t>(r - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (atoms[i] != m - 1) continue;
    for (std::size_t j = 0; j < n; ++j) bonds[i * n + j] = bonds[j * n + i] = vbond;
  }
  return MolecularGraph(n, m, r, std::move(atoms), std::move(bonds));
}

Tensor one_hot_adjacency(std::span<const std::uint8_t> bond_types, std::size_t num_nodes, std::size_t num_bond_types) {
  if (bond_types.size() != num_nodes * num_nodes) throw ShapeError("one_hot_adjacency: table size does not match N");
  Tensor a(Shape{num_nodes, num_nodes, num_bond_types});
  for (std::size_t p = 0; p < bond_types.size(); ++p) a[p * num_bond_types + bond_types[p]] = Real(1);
  return a;
}

MolecularGraph permute_nodes(const MolecularGraph& g, std::span<const std::size_t> perm) {
  const std::size_t n = g.num_nodes();
  if (perm.size() != n) throw InvalidArgument("permute_nodes: permutation length differs from N");
  std::vector<bool> seen(n, false);
  for (std::size_t p : perm) {
    if (p >= n || seen[p]) throw InvalidArgument("permute_nodes: not a bijection on {0..N-1}");
    seen[p] = true;
  }
  std::vector<std::uint8_t> atoms(n), bonds(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    atoms[i] = static_cast<std::uint8_t>(g.atom_type(perm[i]));
    for (std::size_t j = 0; j < n; ++j) bonds[i * n + j] = static_cast<std::uint8_t>(g.bond_type(perm[i], perm[j]));
  }
  return MolecularGraph(n, g.num_atom_types(), g.num_bond_types(), std::move(atoms), std::move(bonds));
}

}  // namespace gnvp
