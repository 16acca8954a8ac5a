// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

// Regenerates the bundled corpora:
//   make_corpus <data dir>
// writes qm9lite.smi (256 molecules, up to 9 heavy atoms of C/N/O/F) and
// zinclite.smi (64 molecules, up to 38 heavy atoms, adds S and Cl).

#include <filesystem>
#include <fstream>
#include <iostream>

#include "gnvp/corpus.hpp"
#include "gnvp/graph.hpp"

namespace {

int write(const std::filesystem::path& path, const std::string& header, const std::vector<std::string>& smiles) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) {
    std::cerr << "make_corpus: cannot write " << path << "\n";
    return 2;
  }
  f << header;
  for (const std::string& s : smiles) f << s << "\n";
  std::cout << "wrote " << smiles.size() << " molecules to " << path.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : GNVP_DATA_DIR;
  std::filesystem::create_directories(dir);

  gnvp::CorpusOptions small;
  small.max_atoms = gnvp::GraphSpec::qm9lite().num_nodes();
  gnvp::Rng rng_small(20260101);
  if (int rc = write(dir / "qm9lite.smi", "# qm9lite: 256 random valid molecules, seed 20260101\n",
                     gnvp::random_corpus(rng_small, small, 256));
      rc != 0) {
    return rc;
  }

  gnvp::CorpusOptions large;
  large.atoms = {"C", "N", "O", "F", "S", "Cl"};
  large.weights = {8, 1.5, 1.5, 0.4, 0.5, 0.4};
  large.min_atoms = 10;
  large.max_atoms = gnvp::GraphSpec::zinclite().num_nodes();
  large.ring_rate = 2.0;
  gnvp::Rng rng_large(20260102);
  return write(dir / "zinclite.smi", "# zinclite: 64 random valid molecules, seed 20260102\n",
               gnvp::random_corpus(rng_large, large, 64));
}
