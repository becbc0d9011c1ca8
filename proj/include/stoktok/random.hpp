// Copyright 2026 The stoktok Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include <boost/multiprecision/cpp_int.hpp>

#include "stoktok/error.hpp"

namespace stoktok {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Every stochastic routine takes one of these by reference. Callers own it.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed for the index-th unit of work (input line, dataset item). Depends only
// on (seed, index), so results do not change with the degree of parallelism.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index));
}

// Uniform integer in [0, n). n must be positive.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  if (n == 0) throw InputError("uniform_index: empty range");
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

// Exact uniform draw from [0, n) for arbitrary-precision n, by rejection over
// whole 64-bit limbs.
inline BigInt uniform_below(Rng& rng, const BigInt& n) {
  if (n <= 0) throw InputError("uniform_below: empty range");
  if (n <= BigInt(std::numeric_limits<std::uint64_t>::max())) {
    return BigInt(uniform_index(rng, n.convert_to<std::uint64_t>()));
  }
  const std::size_t bits = boost::multiprecision::msb(n) + 1;
  const std::size_t limbs = (bits + 63) / 64;
  const std::size_t top_bits = bits - (limbs - 1) * 64;
  for (;;) {
    BigInt r = 0;
    for (std::size_t i = 0; i < limbs; ++i) {
      std::uint64_t limb = rng();
      if (i == 0 && top_bits < 64) limb &= (std::uint64_t{1} << top_bits) - 1;
      r <<= 64;
      r += limb;
    }
    if (r < n) return r;
  }
}

inline bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::bernoulli_distribution(p)(rng);
}

}  // namespace stoktok
