// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "gnvp/chem.hpp"

namespace gnvp::detail {

/// SMILES text for `m` with DFS roots and neighbour visits ordered by `rank`
/// (lower first). Output depends only on the ranked graph, not on atom indices.
std::string write_ranked_smiles(const Molecule& m, const std::vector<std::size_t>& rank);

}  // namespace gnvp::detail
