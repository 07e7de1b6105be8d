// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace augloop {

/// Uniform in [0, 1) from the top 53 bits. Unlike
/// std::uniform_real_distribution the result is identical on every
/// standard library.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// FNV-1a; used to mix string keys into seeds.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Per-attempt seed derived from a base seed, an item id and an attempt index.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view item_id, int attempt) {
  return splitmix64(splitmix64(base ^ fnv1a64(item_id)) + static_cast<std::uint64_t>(attempt));
}

}  // namespace augloop
