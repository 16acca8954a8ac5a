// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Fixtures and independent oracles shared by the unit tests and the
// acceptance runner.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "gnvp/chem.hpp"
#include "gnvp/corpus.hpp"
#include "gnvp/flow.hpp"
#include "gnvp/graph.hpp"
#include "gnvp/rng.hpp"
#include "gnvp/tensor.hpp"
#include "gnvp/training.hpp"

namespace gnvp::testing {

inline std::filesystem::path data_path(const std::string& file) { return std::filesystem::path(GNVP_DATA_DIR) / file; }

inline const Dataset& qm9_corpus() {
  static const Dataset data = load_dataset(data_path("qm9lite.smi"), GraphSpec::qm9lite());
  return data;
}

inline const Dataset& zinc_corpus() {
  static const Dataset data = load_dataset(data_path("zinclite.smi"), GraphSpec::zinclite());
  return data;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag));
    path_ = std::filesystem::temp_directory_path() / ("gnvp_" + tag + "_" + std::to_string(rng() % 1000000007ULL));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random valid molecule that fits `spec`, as a graph.
inline MolecularGraph random_graph(const GraphSpec& spec, Rng& rng) {
  CorpusOptions opt;
  opt.atoms.clear();
  opt.weights.clear();
  for (std::size_t a = 0; a + 1 < spec.num_atom_types(); ++a) {
    opt.atoms.push_back(spec.atom_vocab()[a]);
    opt.weights.push_back(1.0);
  }
  opt.max_atoms = spec.num_nodes();
  if (spec.max_bond_order() < 2) opt.multiple_bond_rate = 0;
  if (spec.max_bond_order() < 3) opt.ring_rate = 0.3;
  for (;;) {
    const Molecule m = random_molecule(rng, opt);
    bool fits = true;
    for (const Bond& b : m.bonds) fits = fits && b.order <= spec.max_bond_order();
    if (fits) return to_graph(m, spec);
  }
}

/// Dequantization keeping every entry at least `margin` inside its unit cell,
/// so finite differences never cross a floor boundary.
inline DequantizedGraph interior_dequantize(const MolecularGraph& g, Rng& rng, Real margin = Real(0.05)) {
  DequantizedGraph d{g.adjacency_tensor(), g.feature_tensor(), kDefaultDequantScale};
  for (Real& v : d.adjacency.data()) v += margin + (1 - 2 * margin) * rng.uniform();
  for (Real& v : d.features.data()) v += margin + (1 - 2 * margin) * rng.uniform();
  return d;
}

inline Tensor flatten_graph(const DequantizedGraph& g) {
  Tensor z(Shape{g.adjacency.size() + g.features.size()});
  std::copy(g.adjacency.data().begin(), g.adjacency.data().end(), z.data().begin());
  std::copy(g.features.data().begin(), g.features.data().end(),
            z.data().begin() + static_cast<std::ptrdiff_t>(g.adjacency.size()));
  return z;
}

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>;

/// Central-difference Jacobian of f: R^n -> R^m.
inline Matrix numeric_jacobian(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, Real h) {
  const Tensor y0 = f(x);
  Matrix j(static_cast<Eigen::Index>(y0.size()), static_cast<Eigen::Index>(x.size()));
  for (std::size_t c = 0; c < x.size(); ++c) {
    Tensor xp = x, xm = x;
    xp[c] += h;
    xm[c] -= h;
    const Tensor yp = f(xp), ym = f(xm);
    for (std::size_t r = 0; r < y0.size(); ++r) {
      j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (yp[r] - ym[r]) / (2 * h);
    }
  }
  return j;
}

inline double log_abs_det(const Matrix& j) {
  const Eigen::PartialPivLU<Matrix> lu(j);
  double s = 0;
  for (Eigen::Index i = 0; i < j.rows(); ++i) s += std::log(std::abs(lu.matrixLU()(i, i)));
  return s;
}

/// Brute-force isomorphism: backtracking over atom maps that preserve symbols,
/// degrees and bond orders.
inline bool isomorphic(const Molecule& a, const Molecule& b) {
  const std::size_t n = a.size();
  if (n != b.size() || a.bonds.size() != b.bonds.size()) return false;
  std::vector<std::vector<int>> ma(n, std::vector<int>(n, 0)), mb(n, std::vector<int>(n, 0));
  for (const Bond& e : a.bonds) ma[e.i][e.j] = ma[e.j][e.i] = e.order;
  for (const Bond& e : b.bonds) mb[e.i][e.j] = mb[e.j][e.i] = e.order;
  const std::vector<int> va = a.valences(), vb = b.valences();
  std::vector<std::size_t> map(n);
  std::vector<char> used(n, 0);
  std::function<bool(std::size_t)> place = [&](std::size_t i) {
    if (i == n) return true;
    for (std::size_t k = 0; k < n; ++k) {
      if (used[k] || a.atoms[i] != b.atoms[k] || va[i] != vb[k]) continue;
      bool ok = true;
      for (std::size_t p = 0; p < i && ok; ++p) ok = ma[i][p] == mb[k][map[p]];
      if (!ok) continue;
      used[k] = 1;
      map[i] = k;
      if (place(i + 1)) return true;
      used[k] = 0;
    }
    return false;
  };
  return place(0);
}

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// Reduced QM9-lite architecture that trains in seconds.
inline FlowConfig small_config(const GraphSpec& spec) {
  FlowConfig c = FlowConfig::for_spec(spec);
  c.adjacency_layers = spec.num_nodes();
  c.node_layers = spec.num_nodes();
  c.mlp_hidden = 32;
  c.gcn_hidden = 16;
  return c;
}

/// Small QM9-lite model trained briefly on the bundled corpus; built once.
inline const FlowModel& trained_small_model() {
  static const FlowModel model = [] {
    const GraphSpec spec = GraphSpec::qm9lite();
    TrainState state = fresh_train_state(FlowModel(spec, small_config(spec), 3));
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.batch_size = 32;
    cfg.seed = 3;
    train(state, qm9_corpus().graphs, cfg);
    return state.model;
  }();
  return model;
}

}  // namespace gnvp::testing
