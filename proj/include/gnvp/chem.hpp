// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gnvp/error.hpp"
#include "gnvp/graph.hpp"

namespace gnvp {

struct Bond {
  std::size_t i;
  std::size_t j;
  int order;  ///< 1, 2 or 3

  friend bool operator==(const Bond&, const Bond&) = default;
};

/// Heavy-atom molecule: atom symbols plus bond triples. May be empty (a
/// decoded all-virtual graph); check_validity rejects empty molecules.
struct Molecule {
  std::vector<std::string> atoms;
  std::vector<Bond> bonds;

  std::size_t size() const noexcept { return atoms.size(); }
  /// Sum of bond orders at each atom.
  std::vector<int> valences() const;
  /// Neighbour lists as (atom, order) pairs.
  std::vector<std::vector<std::pair<std::size_t, int>>> neighbours() const;
  /// Number of connected components (0 for an empty molecule).
  std::size_t component_count() const;
};

/// Maximum total bond order per atom symbol.
class ValenceTable {
 public:
  ValenceTable() = default;
  explicit ValenceTable(std::map<std::string, int, std::less<>> max_valence) : max_(std::move(max_valence)) {}

  /// C 4, N 3, O 2, F 1, S 2, Cl 1.
  static ValenceTable standard();

  /// Throws DataError for symbols missing from the table.
  int max_valence(std::string_view symbol) const;
  bool contains(std::string_view symbol) const { return max_.find(symbol) != max_.end(); }

 private:
  std::map<std::string, int, std::less<>> max_;
};

class ParseError : public DataError {
 public:
  enum class Kind {
    kEmpty,
    kUnknownAtom,
    kUnmatchedParenthesis,
    kUnmatchedRingDigit,
    kDanglingBond,
    kUnexpectedCharacter,
    kInvalidRingClosure,
  };

  ParseError(Kind kind, std::size_t offset, const std::string& detail);

  Kind kind() const noexcept { return kind_; }
  /// Byte offset into the input where the problem was detected.
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

/// Parses kekulized SMILES restricted to C N O F S Cl, '-', '=', '#' bonds,
/// parenthesised branches, ring-closure digits 1-9 and '.' separators.
/// Aromatic (lowercase) atoms and bracket atoms are rejected.
Molecule parse_smiles_lite(std::string_view text);

/// Serializes without canonical reordering (atoms in molecule order).
std::string write_smiles(const Molecule& m);

/// Canonical ranking: position of each atom in the canonical order. Identical
/// for any relabeling of an isomorphic molecule up to automorphism.
std::vector<std::size_t> canonical_order(const Molecule& m);

/// Canonical SMILES-lite string: isomorphic molecules yield identical text.
/// Throws DataError for molecules failing the standard valence table.
std::string write_smiles_canonical(const Molecule& m);
std::string write_smiles_canonical(const Molecule& m, const ValenceTable& table);

struct ValidityReport {
  bool valid = false;
  bool connected = false;
  struct Violation {
    std::size_t atom;
    std::string symbol;
    int valence;
    int max_valence;
  };
  std::vector<Violation> violations;
  bool empty = false;
};

/// Valid iff non-empty and every atom's bond-order sum is within its maximum.
/// Connectivity is reported but not required.
ValidityReport check_validity(const Molecule& m, const ValenceTable& table);

/// Places atom k at node k and pads with virtual nodes/bonds.
MolecularGraph to_graph(const Molecule& m, const GraphSpec& spec);
/// Drops virtual nodes and virtual-channel pairs.
Molecule from_graph(const MolecularGraph& g, const GraphSpec& spec);

struct Dataset {
  std::vector<MolecularGraph> graphs;
  std::vector<Molecule> molecules;
  std::vector<std::string> smiles;       ///< source text per entry
  std::vector<std::size_t> line_numbers;  ///< 1-based
  std::vector<std::string> warnings;      ///< lenient-mode skips
};

enum class LoadMode { kStrict, kLenient };

/// Reads newline-delimited SMILES-lite; '#' starts a comment line. In strict
/// mode the first bad line throws DataError citing its line number; in
/// lenient mode it is skipped with a warning.
Dataset load_dataset(const std::filesystem::path& path, const GraphSpec& spec, LoadMode mode = LoadMode::kStrict);
Dataset parse_dataset(std::string_view text, const GraphSpec& spec, LoadMode mode = LoadMode::kStrict);

}  // namespace gnvp
