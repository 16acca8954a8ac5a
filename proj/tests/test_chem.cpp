// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>

#include "gnvp/chem.hpp"
#include "gnvp/corpus.hpp"
#include "gnvp/error.hpp"
#include "support.hpp"

using namespace gnvp;
using gnvp::testing::isomorphic;
using gnvp::testing::qm9_corpus;
using gnvp::testing::random_permutation;
using gnvp::testing::zinc_corpus;

namespace {

Molecule relabel(const Molecule& m, const std::vector<std::size_t>& perm) {
  // Atom i of the result is atom perm[i] of m.
  std::vector<std::size_t> where(m.size());
  for (std::size_t i = 0; i < perm.size(); ++i) where[perm[i]] = i;
  Molecule out;
  for (std::size_t i = 0; i < m.size(); ++i) out.atoms.push_back(m.atoms[perm[i]]);
  for (const Bond& b : m.bonds) out.bonds.push_back({where[b.i], where[b.j], b.order});
  return out;
}

ParseError::Kind parse_error_kind(std::string_view text) {
  try {
    parse_smiles_lite(text);
  } catch (const ParseError& e) {
    return e.kind();
  }
  FAIL("expected a parse error for '" << std::string(text) << "'");
  return ParseError::Kind::kEmpty;
}

}  // namespace

TEST_SUITE("chem-io") {
  TEST_CASE("single carbon") {
    const Molecule m = parse_smiles_lite("C");
    CHECK(m.atoms.size() == 1);
    CHECK(m.bonds.empty());
    CHECK(write_smiles(m) == "C");
    CHECK(check_validity(m, ValenceTable::standard()).valid);
  }

  TEST_CASE("carbon dioxide") {
    const Molecule m = parse_smiles_lite("O=C=O");
    CHECK(m.atoms == std::vector<std::string>{"O", "C", "O"});
    REQUIRE(m.bonds.size() == 2);
    CHECK(m.bonds[0] == Bond{0, 1, 2});
    CHECK(m.bonds[1] == Bond{1, 2, 2});
  }

  TEST_CASE("cyclohexane") {
    const Molecule m = parse_smiles_lite("C1CCCCC1");
    CHECK(m.atoms.size() == 6);
    CHECK(m.bonds.size() == 6);
    for (int v : m.valences()) CHECK(v == 2);
    CHECK(check_validity(m, ValenceTable::standard()).valid);
  }

  TEST_CASE("branches, two-letter atoms and separators") {
    const Molecule m = parse_smiles_lite("CC(Cl)(=O)S.N");
    CHECK(m.atoms == std::vector<std::string>{"C", "C", "Cl", "O", "S", "N"});
    CHECK(m.bonds.size() == 4);
    CHECK(m.component_count() == 2);
  }

  TEST_CASE("parse errors carry kind and offset") {
    CHECK(parse_error_kind("") == ParseError::Kind::kEmpty);
    CHECK(parse_error_kind("CX") == ParseError::Kind::kUnknownAtom);
    CHECK(parse_error_kind("c1ccccc1") == ParseError::Kind::kUnknownAtom);
    CHECK(parse_error_kind("C(C") == ParseError::Kind::kUnmatchedParenthesis);
    CHECK(parse_error_kind("CC)") == ParseError::Kind::kUnmatchedParenthesis);
    CHECK(parse_error_kind("C1CC") == ParseError::Kind::kUnmatchedRingDigit);
    CHECK(parse_error_kind("CC=") == ParseError::Kind::kDanglingBond);
    CHECK(parse_error_kind("C[NH]") == ParseError::Kind::kUnknownAtom);
    CHECK(parse_error_kind("C11") == ParseError::Kind::kInvalidRingClosure);
    try {
      parse_smiles_lite("CCX");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 2);
    }
  }

  TEST_CASE("valence violations") {
    const Molecule f = parse_smiles_lite("FCF");
    CHECK(check_validity(f, ValenceTable::standard()).valid);
    Molecule bad;
    bad.atoms = {"F", "C", "C"};
    bad.bonds = {{0, 1, 1}, {0, 2, 1}};
    const ValidityReport r = check_validity(bad, ValenceTable::standard());
    CHECK_FALSE(r.valid);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].atom == 0);
    CHECK(r.violations[0].symbol == "F");
    CHECK(r.violations[0].valence == 2);
    CHECK(r.violations[0].max_valence == 1);
    CHECK_FALSE(check_validity(Molecule{}, ValenceTable::standard()).valid);
    CHECK(check_validity(parse_smiles_lite("C=C=C=C"), ValenceTable::standard()).valid);
    CHECK_FALSE(check_validity(parse_smiles_lite("N(=C)=C"), ValenceTable::standard()).valid);
    CHECK(check_validity(parse_smiles_lite("C.C"), ValenceTable::standard()).valid);
    CHECK_FALSE(check_validity(parse_smiles_lite("C.C"), ValenceTable::standard()).connected);
  }

  TEST_CASE("graph conversion") {
    const GraphSpec spec = GraphSpec::qm9lite();
    const Molecule c = parse_smiles_lite("C");
    const MolecularGraph g = to_graph(c, spec);
    CHECK(g.atom_type(0) == 0);
    for (std::size_t i = 1; i < 9; ++i) CHECK(g.is_virtual_atom(i));
    CHECK(isomorphic(from_graph(g, spec), c));

    const Molecule full = parse_smiles_lite("CCCCCCCCC");
    const MolecularGraph h = to_graph(full, spec);
    for (std::size_t i = 0; i < 9; ++i) CHECK_FALSE(h.is_virtual_atom(i));

    CHECK_THROWS_AS(to_graph(parse_smiles_lite("CCCCCCCCCC"), spec), DataError);
    CHECK_THROWS_AS(to_graph(parse_smiles_lite("CS"), spec), DataError);
  }

  TEST_CASE("dataset loading") {
    const Dataset d = parse_dataset("C\nO=C=O\n", GraphSpec::qm9lite());
    CHECK(d.graphs.size() == 2);
    CHECK(d.smiles[1] == "O=C=O");
    CHECK(d.line_numbers[1] == 2);

    try {
      parse_dataset("C\nCC\nC1CC\nCCC\n", GraphSpec::qm9lite());
      FAIL("expected a data error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    const Dataset lenient = parse_dataset("C\nC1CC\nCCC\n", GraphSpec::qm9lite(), LoadMode::kLenient);
    CHECK(lenient.graphs.size() == 2);
    CHECK(lenient.warnings.size() == 1);
    CHECK_THROWS_AS(load_dataset("/nonexistent/file.smi", GraphSpec::qm9lite()), DataError);
  }

  TEST_CASE("bundled QM9-lite corpus") {
    const Dataset& d = qm9_corpus();
    CHECK(d.graphs.size() == 256);
    std::set<std::string> keys;
    for (const Molecule& m : d.molecules) {
      CHECK(check_validity(m, ValenceTable::standard()).valid);
      keys.insert(write_smiles_canonical(m));
    }
    CHECK(keys.size() == 256);
  }

  TEST_CASE("bundled ZINC-lite corpus") {
    const Dataset& d = zinc_corpus();
    CHECK(d.graphs.size() == 64);
    for (const Molecule& m : d.molecules) CHECK(check_validity(m, ValenceTable::standard()).valid);
  }

  TEST_CASE("parse/write/parse and graph round trips are isomorphic") {
    const GraphSpec spec = GraphSpec::qm9lite();
    for (const Molecule& m : qm9_corpus().molecules) {
      CHECK(isomorphic(parse_smiles_lite(write_smiles(m)), m));
      CHECK(isomorphic(parse_smiles_lite(write_smiles_canonical(m)), m));
      CHECK(isomorphic(from_graph(to_graph(m, spec), spec), m));
    }
  }

  TEST_CASE("canonical SMILES is invariant under relabeling") {
    Rng rng(21);
    for (const Molecule& m : zinc_corpus().molecules) {
      const std::string key = write_smiles_canonical(m);
      for (int t = 0; t < 100; ++t) CHECK(write_smiles_canonical(relabel(m, random_permutation(m.size(), rng))) == key);
    }
  }

  TEST_CASE("canonical SMILES separates non-isomorphic molecules") {
    CHECK(write_smiles_canonical(parse_smiles_lite("CCO")) != write_smiles_canonical(parse_smiles_lite("COC")));
    CHECK(write_smiles_canonical(parse_smiles_lite("C1CC1C")) != write_smiles_canonical(parse_smiles_lite("CCCC")));
    CHECK(write_smiles_canonical(parse_smiles_lite("C=CC")) != write_smiles_canonical(parse_smiles_lite("CCC")));
    CHECK(write_smiles_canonical(parse_smiles_lite("OCC")) == write_smiles_canonical(parse_smiles_lite("CCO")));
    CHECK_THROWS_AS(write_smiles_canonical(parse_smiles_lite("FCF(C)")), DataError);
  }

  TEST_CASE("random corpus molecules are valid and connected") {
    Rng rng(22);
    CorpusOptions opt;
    for (int t = 0; t < 500; ++t) {
      const Molecule m = random_molecule(rng, opt);
      const ValidityReport r = check_validity(m, ValenceTable::standard());
      CHECK(r.valid);
      CHECK(r.connected);
      CHECK(m.size() <= opt.max_atoms);
    }
  }
}
