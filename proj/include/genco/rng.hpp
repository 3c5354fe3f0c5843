// Copyright 2026 The genco Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace genco {

using Engine = std::mt19937_64;

/// 64-bit FNV-1a. All external string identifiers are hashed with this.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (char c : text) {
    hash ^= static_cast<std::uint8_t>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                                    std::uint64_t counter = 0) {
  return mix64(mix64(seed ^ fnv1a64(stream)) + mix64(counter + 0x632be59bd9b4e019ULL));
}

/// Named, counter-keyed RNG stream. Two streams with different names (or
/// counters) are statistically independent; the same triple always
/// reproduces the same sequence.
inline Engine make_stream(std::uint64_t seed, std::string_view stream,
                          std::uint64_t counter = 0) {
  return Engine(derive_seed(seed, stream, counter));
}

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). n must be > 0.
inline std::uint64_t uniform_index(Engine& rng, std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
}

}  // namespace genco
