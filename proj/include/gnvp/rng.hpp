// SPDX-FileCopyrightText: Copyright (c) 2026 The gnvp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>

#include "gnvp/tensor.hpp"

namespace gnvp {

/// Counter-based, splittable generator. The n-th output is a pure function of
/// (key, n), so streams derived with split() are reproducible regardless of
/// how work is scheduled. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}
  Rng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const;

  /// Uniform in [0, 1).
  Real uniform();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal draw (Box-Muller; two counter steps per draw).
  Real normal();

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  static std::uint64_t mix(std::uint64_t z);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace gnvp
