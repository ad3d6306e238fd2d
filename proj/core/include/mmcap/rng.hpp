// core/include/mmcap/rng.hpp

// Copyright 2026  The mmcap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string_view>

namespace mmcap {

using Rng = std::mt19937_64;

/// Named random sub-streams. Every random draw in training comes from an
/// Rng seeded by derive_seed(run seed, stream, ...), so any iteration can be
/// replayed without carrying generator state around.
enum class RngStream : std::uint64_t {
  kInit = 1,
  kMasking = 2,
  kSampling = 3,
  kDropout = 4,
  kShuffle = 5,
  kData = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, RngStream stream,
                                    std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = splitmix64(h ^ a);
  return splitmix64(h ^ b);
}

inline Rng make_rng(std::uint64_t seed, RngStream stream, std::uint64_t a = 0,
                    std::uint64_t b = 0) {
  return Rng(derive_seed(seed, stream, a, b));
}

// Library-independent draws (std distributions differ across standard
// libraries, which would break cross-platform replay).

/// Uniform in [0, 1).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [lo, hi].
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(rng());
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return lo + static_cast<std::int64_t>(r % span);
}

/// Standard normal via Box-Muller.
double normal01(Rng& rng);

/// In-place Fisher-Yates shuffle.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = last - first;
  for (auto i = n - 1; i > 0; --i) {
    auto j = uniform_int(rng, 0, i);
    std::iter_swap(first + i, first + j);
  }
}

}  // namespace mmcap
