// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tea {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream from a run seed and a tuple of stream ids,
/// e.g. (seed, kTrainNegatives, user, epoch). Parallel workers that own a
/// stream produce the same draws regardless of scheduling.
inline Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t id : ids) h = mix64(h ^ mix64(id + 0x632be59bd9b4e019ULL));
  return Rng(h);
}

/// Stream tags. Keep values stable: they are part of the reproducibility contract.
enum StreamTag : std::uint64_t {
  kStreamInit = 1,
  kStreamShuffle = 2,
  kStreamNegatives = 3,
  kStreamDropout = 4,
  kStreamEvalCandidates = 5,
  kStreamWalkCap = 6,
  kStreamSynthetic = 7,
};

}  // namespace tea
