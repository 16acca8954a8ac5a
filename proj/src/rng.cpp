// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#include "gnvp/rng.hpp"

#include <cmath>
#include <numbers>

namespace gnvp {

// SplitMix64 finalizer.
std::uint64_t Rng::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(mix(key_ ^ mix(stream + 0x243f6a8885a308d3ULL)), 0);
}

Real Rng::uniform() {
  // 53 random bits -> [0, 1) exactly representable in double.
  const double u = static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  auto r = static_cast<Real>(u);
  if (r >= Real(1)) r = std::nextafter(Real(1), Real(0));
  return r;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = max() - max() % bound;
  std::uint64_t x;
  do {
    x = (*this)();
  } while (x >= limit);
  return x % bound;
}

Real Rng::normal() {
  double u1 = static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  const double u2 = static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return static_cast<Real>(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2));
}

}  // namespace gnvp
