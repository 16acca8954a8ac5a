// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Seeded random generator of small valid molecules, used to build the bundled
// corpora and test fixtures.

#include <string>
#include <vector>

#include "gnvp/chem.hpp"
#include "gnvp/rng.hpp"

namespace gnvp {

struct CorpusOptions {
  std::vector<std::string> atoms{"C", "N", "O", "F"};
  /// Relative draw weight per entry of `atoms`.
  std::vector<double> weights{6, 1.5, 1.5, 0.5};
  std::size_t min_atoms = 1;
  std::size_t max_atoms = 9;
  /// Chance of upgrading a tree bond to a higher order when valence allows.
  double multiple_bond_rate = 0.25;
  /// Expected ring closures per molecule.
  double ring_rate = 0.6;
};

/// Connected molecule that passes check_validity with the standard table.
Molecule random_molecule(Rng& rng, const CorpusOptions& options);

/// `count` molecules with distinct canonical SMILES, returned as those strings.
std::vector<std::string> random_corpus(Rng& rng, const CorpusOptions& options, std::size_t count);

}  // namespace gnvp
