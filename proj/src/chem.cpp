// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <numeric>
#include <sstream>

#include "gnvp/chem.hpp"

namespace gnvp {

std::vector<int> Molecule::valences() const {
  std::vector<int> v(atoms.size(), 0);
  for (const Bond& b : bonds) {
    v[b.i] += b.order;
    v[b.j] += b.order;
  }
  return v;
}

std::vector<std::vector<std::pair<std::size_t, int>>> Molecule::neighbours() const {
  std::vector<std::vector<std::pair<std::size_t, int>>> out(atoms.size());
  for (const Bond& b : bonds) {
    out[b.i].emplace_back(b.j, b.order);
    out[b.j].emplace_back(b.i, b.order);
  }
  return out;
}

std::size_t Molecule::component_count() const {
  std::vector<std::size_t> parent(atoms.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t components = atoms.size();
  for (const Bond& b : bonds) {
    const std::size_t a = find(b.i), c = find(b.j);
    if (a != c) {
      parent[a] = c;
      --components;
    }
  }
  return components;
}

ValenceTable ValenceTable::standard() {
  return ValenceTable({{"C", 4}, {"N", 3}, {"O", 2}, {"F", 1}, {"S", 2}, {"Cl", 1}});
}

int ValenceTable::max_valence(std::string_view symbol) const {
  const auto it = max_.find(symbol);
  if (it == max_.end()) throw DataError("valence table has no entry for atom '" + std::string(symbol) + "'");
  return it->second;
}

ValidityReport check_validity(const Molecule& m, const ValenceTable& table) {
  ValidityReport report;
  report.empty = m.atoms.empty();
  const std::vector<int> val = m.valences();
  for (std::size_t a = 0; a < m.atoms.size(); ++a) {
    const int limit = table.max_valence(m.atoms[a]);
    if (val[a] > limit) report.violations.push_back({a, m.atoms[a], val[a], limit});
  }
  report.connected = !report.empty && m.component_count() == 1;
  report.valid = !report.empty && report.violations.empty();
  return report;
}

MolecularGraph to_graph(const Molecule& m, const GraphSpec& spec) {
  const std::size_t n = spec.num_nodes();
  if (m.atoms.size() > n) {
    throw DataError("molecule with " + std::to_string(m.atoms.size()) + " atoms exceeds spec '" + spec.name() +
                    "' (N=" + std::to_string(n) + ")");
  }
  std::vector<std::uint8_t> atoms(n, static_cast<std::uint8_t>(spec.virtual_atom()));
  std::vector<std::uint8_t> bonds(n * n, static_cast<std::uint8_t>(spec.virtual_bond()));
  for (std::size_t a = 0; a < m.atoms.size(); ++a) {
    const int idx = spec.atom_index(m.atoms[a]);
    if (idx < 0) throw DataError("atom '" + m.atoms[a] + "' is not in the vocabulary of spec '" + spec.name() + "'");
    atoms[a] = static_cast<std::uint8_t>(idx);
  }
  for (const Bond& b : m.bonds) {
    if (b.i >= m.atoms.size() || b.j >= m.atoms.size() || b.i == b.j) throw DataError("bond with invalid atom indices");
    if (b.order < 1 || b.order > spec.max_bond_order()) {
      throw DataError("bond order " + std::to_string(b.order) + " is not representable in spec '" + spec.name() + "'");
    }
    if (bonds[b.i * n + b.j] != spec.virtual_bond()) throw DataError("duplicate bond between atoms");
    bonds[b.i * n + b.j] = bonds[b.j * n + b.i] = static_cast<std::uint8_t>(b.order - 1);
  }
  return MolecularGraph(n, spec.num_atom_types(), spec.num_bond_types(), std::move(atoms), std::move(bonds));
}

Molecule from_graph(const MolecularGraph& g, const GraphSpec& spec) {
  if (!g.matches(spec)) throw DataError("from_graph: graph dimensions do not match spec '" + spec.name() + "'");
  Molecule m;
  const std::size_t n = g.num_nodes();
  std::vector<std::size_t> index(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (g.is_virtual_atom(i)) continue;
    index[i] = m.atoms.size();
    m.atoms.push_back(spec.atom_vocab()[g.atom_type(i)]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (g.is_virtual_bond(i, j)) continue;
      m.bonds.push_back(Bond{index[i], index[j], static_cast<int>(g.bond_type(i, j)) + 1});
    }
  }
  return m;
}

Dataset parse_dataset(std::string_view text, const GraphSpec& spec, LoadMode mode) {
  Dataset ds;
  const ValenceTable table = ValenceTable::standard();
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    try {
      Molecule m = parse_smiles_lite(line);
      const ValidityReport report = check_validity(m, table);
      if (!report.valid) throw DataError("molecule violates the valence table");
      MolecularGraph g = to_graph(m, spec);
      ds.graphs.push_back(std::move(g));
      ds.molecules.push_back(std::move(m));
      ds.smiles.emplace_back(line);
      ds.line_numbers.push_back(line_no);
    } catch (const DataError& e) {
      const std::string msg = "line " + std::to_string(line_no) + ": " + e.what();
      if (mode == LoadMode::kStrict) throw DataError(msg);
      ds.warnings.push_back(msg);
    }
    if (end == text.size()) break;
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const GraphSpec& spec, LoadMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw DataError("failed reading dataset '" + path.string() + "'");
  return parse_dataset(buf.str(), spec, mode);
}

}  // namespace gnvp
