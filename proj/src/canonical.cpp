// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

// Canonical atom ordering by iterative neighbourhood refinement with
// individualization of tied atoms. Leaves of the search are compared by a
// certificate (symbols in canonical order plus the relabelled bond matrix);
// the smallest certificate wins. Automorphisms found along the way prune
// equivalent branches.

#include <algorithm>
#include <numeric>
#include <optional>
#include <tuple>

#include "chem_internal.hpp"
#include "gnvp/chem.hpp"

namespace gnvp {
namespace {

using Ranks = std::vector<std::size_t>;
using Perm = std::vector<std::size_t>;

class Canonicalizer {
 public:
  explicit Canonicalizer(const Molecule& m) : m_(m), n_(m.size()), nbrs_(m.neighbours()) {
    order_.assign(n_ * n_, 0);
    for (const Bond& b : m.bonds) order_[b.i * n_ + b.j] = order_[b.j * n_ + b.i] = b.order;
  }

  Ranks run() {
    if (n_ == 0) return {};
    const std::vector<int> val = m_.valences();
    std::vector<std::tuple<std::string, std::size_t, int>> keys;
    for (std::size_t a = 0; a < n_; ++a) keys.emplace_back(m_.atoms[a], nbrs_[a].size(), val[a]);
    std::vector<std::size_t> prefix;
    search(densify(keys), prefix);
    return best_labeling_;
  }

 private:
  template <typename Key>
  Ranks densify(const std::vector<Key>& keys) const {
    std::vector<Key> sorted = keys;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    Ranks r(n_);
    for (std::size_t a = 0; a < n_; ++a) {
      r[a] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), keys[a]) - sorted.begin());
    }
    return r;
  }

  static std::size_t cell_count(const Ranks& r) {
    Ranks s = r;
    std::sort(s.begin(), s.end());
    return static_cast<std::size_t>(std::unique(s.begin(), s.end()) - s.begin());
  }

  // Equitable refinement: split cells by the multiset of (neighbour cell, bond order).
  Ranks refine(Ranks r) const {
    std::size_t cells = cell_count(r);
    while (true) {
      using Key = std::pair<std::size_t, std::vector<std::pair<std::size_t, int>>>;
      std::vector<Key> keys(n_);
      for (std::size_t a = 0; a < n_; ++a) {
        keys[a].first = r[a];
        for (const auto& [b, order] : nbrs_[a]) keys[a].second.emplace_back(r[b], order);
        std::sort(keys[a].second.begin(), keys[a].second.end());
      }
      Ranks next = densify(keys);
      const std::size_t next_cells = cell_count(next);
      if (next_cells == cells) return r;
      r = std::move(next);
      cells = next_cells;
    }
  }

  std::string certificate(const Ranks& labeling) const {
    Perm atom_at(n_);
    for (std::size_t a = 0; a < n_; ++a) atom_at[labeling[a]] = a;
    std::string cert;
    for (std::size_t p = 0; p < n_; ++p) {
      cert += m_.atoms[atom_at[p]];
      cert += ',';
    }
    for (std::size_t p = 0; p < n_; ++p) {
      for (std::size_t q = p + 1; q < n_; ++q) cert += static_cast<char>('0' + order_[atom_at[p] * n_ + atom_at[q]]);
    }
    return cert;
  }

  // Union-find orbits of the automorphisms that fix every prefix atom.
  std::vector<std::size_t> orbits(const std::vector<std::size_t>& prefix) const {
    std::vector<std::size_t> parent(n_);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (const Perm& g : automorphisms_) {
      const bool fixes = std::all_of(prefix.begin(), prefix.end(), [&](std::size_t a) { return g[a] == a; });
      if (!fixes) continue;
      for (std::size_t a = 0; a < n_; ++a) parent[find(a)] = find(g[a]);
    }
    for (std::size_t a = 0; a < n_; ++a) parent[a] = find(a);
    return parent;
  }

  void search(Ranks ranks, std::vector<std::size_t>& prefix) {
    ranks = refine(std::move(ranks));
    if (cell_count(ranks) == n_) {
      std::string cert = certificate(ranks);
      if (!best_cert_ || cert < *best_cert_) {
        best_cert_ = std::move(cert);
        best_labeling_ = ranks;
      } else if (cert == *best_cert_) {
        // ranks[a] == best_labeling_[g(a)] defines an automorphism g.
        Perm inverse_best(n_), g(n_);
        for (std::size_t a = 0; a < n_; ++a) inverse_best[best_labeling_[a]] = a;
        for (std::size_t a = 0; a < n_; ++a) g[a] = inverse_best[ranks[a]];
        automorphisms_.push_back(std::move(g));
      }
      return;
    }
    // First non-singleton cell, by rank.
    std::vector<std::size_t> count(n_, 0);
    for (std::size_t r : ranks) ++count[r];
    std::size_t target = 0;
    while (count[target] < 2) ++target;
    std::vector<std::size_t> candidates;
    for (std::size_t a = 0; a < n_; ++a) {
      if (ranks[a] == target) candidates.push_back(a);
    }
    std::vector<std::size_t> explored;
    for (std::size_t c : candidates) {
      if (!explored.empty()) {
        const auto orbit = orbits(prefix);
        const bool equivalent =
            std::any_of(explored.begin(), explored.end(), [&](std::size_t e) { return orbit[e] == orbit[c]; });
        if (equivalent) continue;
      }
      std::vector<std::size_t> keys(n_);
      for (std::size_t a = 0; a < n_; ++a) keys[a] = 2 * ranks[a] + (a == c ? 0 : 1);
      prefix.push_back(c);
      search(densify(keys), prefix);
      prefix.pop_back();
      explored.push_back(c);
    }
  }

  const Molecule& m_;
  std::size_t n_;
  std::vector<std::vector<std::pair<std::size_t, int>>> nbrs_;
  std::vector<int> order_;
  std::optional<std::string> best_cert_;
  Ranks best_labeling_;
  std::vector<Perm> automorphisms_;
};

}  // namespace

std::vector<std::size_t> canonical_order(const Molecule& m) { return Canonicalizer(m).run(); }

std::string write_smiles_canonical(const Molecule& m, const ValenceTable& table) {
  const ValidityReport report = check_validity(m, table);
  if (!report.valid) throw DataError("write_smiles_canonical: molecule is not valid");
  return detail::write_ranked_smiles(m, canonical_order(m));
}

std::string write_smiles_canonical(const Molecule& m) { return write_smiles_canonical(m, ValenceTable::standard()); }

}  // namespace gnvp
