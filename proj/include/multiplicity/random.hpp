/*
 * Copyright 2026 The Multiplicity Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Seeded random streams. std::mt19937_64 is fully specified by the standard;
// the distributions below are written out so draws are identical on every
// platform (the standard library distributions are implementation-defined).

#ifndef MULTIPLICITY_RANDOM_HPP_
#define MULTIPLICITY_RANDOM_HPP_

#include <cstddef>
#include <cstdint>
#include <random>

namespace multiplicity {

inline constexpr std::uint64_t kDefaultSeed = 20240101;

using RandomEngine = std::mt19937_64;

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream number `stream` under `seed`.
inline RandomEngine StreamEngine(std::uint64_t seed, std::uint64_t stream) {
  return RandomEngine(SplitMix64(seed ^ SplitMix64(stream)));
}

// Uniform integer in [0, bound), bound >= 1 (Lemire's multiply-shift with
// rejection, unbiased).
inline std::uint64_t UniformIndex(RandomEngine& rng, std::uint64_t bound) {
  unsigned __int128 product =
      static_cast<unsigned __int128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = static_cast<unsigned __int128>(rng()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

// Uniform double in [0, 1) with 53 random bits.
inline double Uniform01(RandomEngine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool Bernoulli(RandomEngine& rng, double p) { return Uniform01(rng) < p; }

}  // namespace multiplicity

#endif  // MULTIPLICITY_RANDOM_HPP_
