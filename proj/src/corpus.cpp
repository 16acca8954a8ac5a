// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnvp/corpus.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "gnvp/error.hpp"

namespace gnvp {
namespace {

std::size_t pick_weighted(Rng& rng, const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

bool bonded(const Molecule& m, std::size_t a, std::size_t b) {
  return std::any_of(m.bonds.begin(), m.bonds.end(),
                     [&](const Bond& e) { return (e.i == a && e.j == b) || (e.i == b && e.j == a); });
}

}  // namespace

Molecule random_molecule(Rng& rng, const CorpusOptions& opt) {
  if (opt.atoms.empty() || opt.atoms.size() != opt.weights.size()) {
    throw InvalidArgument("random_molecule: atoms and weights must be non-empty and the same length");
  }
  if (opt.min_atoms == 0 || opt.min_atoms > opt.max_atoms) throw InvalidArgument("random_molecule: bad atom range");
  const ValenceTable table = ValenceTable::standard();
  const std::size_t target = opt.min_atoms + static_cast<std::size_t>(rng.below(opt.max_atoms - opt.min_atoms + 1));

  Molecule m;
  std::vector<int> free;
  auto add_atom = [&](std::size_t type) {
    m.atoms.push_back(opt.atoms[type]);
    free.push_back(table.max_valence(opt.atoms[type]));
  };
  // Seed atom with valence >= 2 so the molecule can grow.
  std::size_t first = pick_weighted(rng, opt.weights);
  if (target > 1) {
    while (table.max_valence(opt.atoms[first]) < 2) first = pick_weighted(rng, opt.weights);
  }
  add_atom(first);

  while (m.atoms.size() < target) {
    std::vector<std::size_t> open;
    for (std::size_t a = 0; a < m.atoms.size(); ++a) {
      if (free[a] > 0) open.push_back(a);
    }
    if (open.empty()) break;
    const std::size_t parent = open[rng.below(open.size())];
    const std::size_t child = m.atoms.size();
    add_atom(pick_weighted(rng, opt.weights));
    int order = 1;
    while (order < 3 && std::min(free[parent], free[child]) > order && rng.uniform() < opt.multiple_bond_rate) ++order;
    m.bonds.push_back(Bond{parent, child, order});
    free[parent] -= order;
    free[child] -= order;
  }

  // Ring closures between non-adjacent atoms with spare valence.
  const std::size_t attempts = static_cast<std::size_t>(opt.ring_rate * 2.0 + 0.5);
  for (std::size_t t = 0; t < attempts && m.atoms.size() >= 3; ++t) {
    if (rng.uniform() >= 0.5) continue;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < m.atoms.size(); ++a) {
      for (std::size_t b = a + 1; b < m.atoms.size(); ++b) {
        if (free[a] > 0 && free[b] > 0 && !bonded(m, a, b)) pairs.emplace_back(a, b);
      }
    }
    if (pairs.empty()) break;
    const auto [a, b] = pairs[rng.below(pairs.size())];
    m.bonds.push_back(Bond{a, b, 1});
    --free[a];
    --free[b];
  }
  return m;
}

std::vector<std::string> random_corpus(Rng& rng, const CorpusOptions& options, std::size_t count) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  std::size_t misses = 0;
  while (out.size() < count) {
    const std::string s = write_smiles_canonical(random_molecule(rng, options));
    if (seen.insert(s).second) {
      out.push_back(s);
      misses = 0;
    } else if (++misses > 100000) {
      throw InvalidArgument("random_corpus: cannot find " + std::to_string(count) + " distinct molecules");
    }
  }
  return out;
}

}  // namespace gnvp
