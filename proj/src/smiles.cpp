// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>

#include "chem_internal.hpp"
#include "gnvp/chem.hpp"

namespace gnvp {
namespace {

std::string kind_name(ParseError::Kind kind) {
  switch (kind) {
    case ParseError::Kind::kEmpty: return "empty input";
    case ParseError::Kind::kUnknownAtom: return "unknown atom symbol";
    case ParseError::Kind::kUnmatchedParenthesis: return "unmatched parenthesis";
    case ParseError::Kind::kUnmatchedRingDigit: return "unmatched ring digit";
    case ParseError::Kind::kDanglingBond: return "bond symbol with no following atom";
    case ParseError::Kind::kUnexpectedCharacter: return "unexpected character";
    case ParseError::Kind::kInvalidRingClosure: return "invalid ring closure";
  }
  return "parse error";
}

bool is_bond_symbol(char c) { return c == '-' || c == '=' || c == '#'; }

int bond_order_of(char c) { return c == '=' ? 2 : c == '#' ? 3 : 1; }

bool has_bond(const Molecule& m, std::size_t a, std::size_t b) {
  return std::any_of(m.bonds.begin(), m.bonds.end(),
                     [&](const Bond& e) { return (e.i == a && e.j == b) || (e.i == b && e.j == a); });
}

}  // namespace

ParseError::ParseError(Kind kind, std::size_t offset, const std::string& detail)
    : DataError(kind_name(kind) + " at byte " + std::to_string(offset) + (detail.empty() ? "" : ": " + detail)),
      kind_(kind),
      offset_(offset) {}

Molecule parse_smiles_lite(std::string_view text) {
  using Kind = ParseError::Kind;
  if (text.empty()) throw ParseError(Kind::kEmpty, 0, "");

  struct OpenRing {
    std::size_t atom;
    int order;  // 0 = unspecified
    std::size_t offset;
  };

  Molecule m;
  std::optional<std::size_t> prev;
  int pending = 0;
  std::size_t pending_offset = 0;
  std::vector<std::pair<std::size_t, std::size_t>> branches;  // (atom, offset of '(')
  std::array<std::optional<OpenRing>, 10> rings;

  for (std::size_t pos = 0; pos < text.size(); ++pos) {
    const char ch = text[pos];
    if (ch >= 'A' && ch <= 'Z') {
      std::string symbol(1, ch);
      if (ch == 'C' && pos + 1 < text.size() && text[pos + 1] == 'l') {
        symbol = "Cl";
      } else if (pos + 1 < text.size() && text[pos + 1] >= 'a' && text[pos + 1] <= 'z' && ch != 'C' && ch != 'N' &&
                 ch != 'O' && ch != 'F' && ch != 'S') {
        symbol += text[pos + 1];
      }
      static constexpr std::array<std::string_view, 6> kKnown{"C", "N", "O", "F", "S", "Cl"};
      if (std::find(kKnown.begin(), kKnown.end(), symbol) == kKnown.end()) {
        throw ParseError(Kind::kUnknownAtom, pos, "'" + symbol + "'");
      }
      const std::size_t idx = m.atoms.size();
      m.atoms.push_back(symbol);
      if (prev) m.bonds.push_back(Bond{*prev, idx, pending == 0 ? 1 : pending});
      pending = 0;
      prev = idx;
      pos += symbol.size() - 1;
    } else if ((ch >= 'a' && ch <= 'z') || ch == '[') {
      throw ParseError(Kind::kUnknownAtom, pos,
                       ch == '[' ? "bracket atoms are not supported" : "aromatic atoms are not supported");
    } else if (is_bond_symbol(ch)) {
      if (!prev || pending != 0) throw ParseError(Kind::kDanglingBond, pos, "");
      const char next = pos + 1 < text.size() ? text[pos + 1] : '\0';
      const bool atom_or_ring = (next >= 'A' && next <= 'Z') || (next >= 'a' && next <= 'z') || next == '[' ||
                                (next >= '1' && next <= '9');
      if (!atom_or_ring) throw ParseError(Kind::kDanglingBond, pos, "");
      pending = bond_order_of(ch);
      pending_offset = pos;
    } else if (ch == '(') {
      if (!prev) throw ParseError(Kind::kUnexpectedCharacter, pos, "branch without a preceding atom");
      branches.emplace_back(*prev, pos);
    } else if (ch == ')') {
      if (branches.empty()) throw ParseError(Kind::kUnmatchedParenthesis, pos, "");
      if (text[pos - 1] == '(') throw ParseError(Kind::kUnexpectedCharacter, pos, "empty branch");
      prev = branches.back().first;
      branches.pop_back();
    } else if (ch >= '1' && ch <= '9') {
      if (!prev) throw ParseError(Kind::kUnexpectedCharacter, pos, "ring digit without a preceding atom");
      auto& slot = rings[static_cast<std::size_t>(ch - '0')];
      if (slot) {
        if (pending != 0 && slot->order != 0 && pending != slot->order) {
          throw ParseError(Kind::kInvalidRingClosure, pos, "conflicting ring bond orders");
        }
        const int order = pending != 0 ? pending : (slot->order != 0 ? slot->order : 1);
        if (slot->atom == *prev || has_bond(m, slot->atom, *prev)) {
          throw ParseError(Kind::kInvalidRingClosure, pos, "ring closure duplicates an existing bond");
        }
        m.bonds.push_back(Bond{slot->atom, *prev, order});
        slot.reset();
      } else {
        slot = OpenRing{*prev, pending, pos};
      }
      pending = 0;
    } else if (ch == '.') {
      if (!prev || !branches.empty() || pos + 1 == text.size()) {
        throw ParseError(Kind::kUnexpectedCharacter, pos, "misplaced component separator");
      }
      prev.reset();
    } else {
      throw ParseError(Kind::kUnexpectedCharacter, pos, std::string("'") + ch + "'");
    }
  }
  if (pending != 0) throw ParseError(Kind::kDanglingBond, pending_offset, "");
  if (!branches.empty()) throw ParseError(Kind::kUnmatchedParenthesis, branches.back().second, "");
  for (const auto& slot : rings) {
    if (slot) throw ParseError(Kind::kUnmatchedRingDigit, slot->offset, "");
  }
  return m;
}

std::string write_smiles(const Molecule& m) {
  std::vector<std::size_t> rank(m.size());
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  return detail::write_ranked_smiles(m, rank);
}

namespace detail {
namespace {

const char* bond_symbol(int order) { return order == 2 ? "=" : order == 3 ? "#" : ""; }

struct RankedWriter {
  const Molecule& m;
  const std::vector<std::size_t>& rank;
  std::vector<std::vector<std::pair<std::size_t, int>>> nbrs;
  std::vector<bool> visited;
  std::vector<std::vector<std::pair<std::size_t, int>>> children;
  // Ring bonds: opened at the ancestor, closed at the descendant.
  struct RingBond {
    std::size_t opener, closer;
    int order;
    int digit = 0;
  };
  std::vector<RingBond> ring_bonds;
  std::vector<std::vector<std::size_t>> opens_at, closes_at;  // indices into ring_bonds
  std::array<bool, 10> digit_used{};

  RankedWriter(const Molecule& mol, const std::vector<std::size_t>& r) : m(mol), rank(r) {
    nbrs = m.neighbours();
    for (auto& list : nbrs) {
      std::sort(list.begin(), list.end(), [&](const auto& a, const auto& b) { return rank[a.first] < rank[b.first]; });
    }
    visited.assign(m.size(), false);
    children.resize(m.size());
    opens_at.resize(m.size());
    closes_at.resize(m.size());
  }

  bool ring_recorded(std::size_t a, std::size_t b) const {
    return std::any_of(ring_bonds.begin(), ring_bonds.end(), [&](const RingBond& r) {
      return (r.opener == a && r.closer == b) || (r.opener == b && r.closer == a);
    });
  }

  void discover(std::size_t v, std::optional<std::size_t> parent) {
    visited[v] = true;
    for (const auto& [u, order] : nbrs[v]) {
      if (parent && u == *parent) continue;
      if (visited[u]) {
        if (!ring_recorded(u, v)) {
          ring_bonds.push_back(RingBond{u, v, order});
          opens_at[u].push_back(ring_bonds.size() - 1);
          closes_at[v].push_back(ring_bonds.size() - 1);
        }
        continue;
      }
      children[v].emplace_back(u, order);
      discover(u, v);
    }
  }

  int take_digit() {
    for (int d = 1; d <= 9; ++d) {
      if (!digit_used[static_cast<std::size_t>(d)]) {
        digit_used[static_cast<std::size_t>(d)] = true;
        return d;
      }
    }
    throw DataError("write_smiles: more than 9 simultaneously open rings");
  }

  void emit(std::size_t v, std::string& out) {
    out += m.atoms[v];
    for (std::size_t idx : closes_at[v]) out += std::to_string(ring_bonds[idx].digit);
    for (std::size_t idx : opens_at[v]) {
      ring_bonds[idx].digit = take_digit();
      out += bond_symbol(ring_bonds[idx].order);
      out += std::to_string(ring_bonds[idx].digit);
    }
    for (std::size_t idx : closes_at[v]) digit_used[static_cast<std::size_t>(ring_bonds[idx].digit)] = false;
    const auto& kids = children[v];
    for (std::size_t c = 0; c < kids.size(); ++c) {
      const bool last = c + 1 == kids.size();
      if (!last) out += '(';
      out += bond_symbol(kids[c].second);
      emit(kids[c].first, out);
      if (!last) out += ')';
    }
  }
};

}  // namespace

std::string write_ranked_smiles(const Molecule& m, const std::vector<std::size_t>& rank) {
  RankedWriter w(m, rank);
  std::vector<std::size_t> order(m.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
  std::vector<std::size_t> roots;
  for (std::size_t v : order) {
    if (!w.visited[v]) {
      roots.push_back(v);
      w.discover(v, std::nullopt);
    }
  }
  // Ring digits are opened in emission (pre-)order; sort each atom's ring
  // lists by partner rank so the text depends only on the ranked graph.
  for (std::size_t v = 0; v < m.size(); ++v) {
    auto by_partner = [&](bool opening) {
      return [&, opening](std::size_t a, std::size_t b) {
        const auto& ra = w.ring_bonds[a];
        const auto& rb = w.ring_bonds[b];
        return rank[opening ? ra.closer : ra.opener] < rank[opening ? rb.closer : rb.opener];
      };
    };
    std::sort(w.opens_at[v].begin(), w.opens_at[v].end(), by_partner(true));
    std::sort(w.closes_at[v].begin(), w.closes_at[v].end(), by_partner(false));
  }
  std::string out;
  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (r > 0) out += '.';
    w.emit(roots[r], out);
  }
  return out;
}

}  // namespace detail
}  // namespace gnvp
