#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace caged {

using Rng = std::mt19937_64;

/// Independent sampling streams. Every random draw in training derives from
/// (seed, stream, epoch) so reruns are bit-identical.
enum class Stream : std::uint32_t {
  kEmbeddingInit = 1,
  kCagedInit = 2,
  kShuffle = 3,
  kNegatives = 4,
  kCagedShuffle = 5,
  kCagedNoise = 6,
  kSplit = 7,
  kSynth = 8,
  kProbe = 9,
};

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t epoch = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(epoch),
                    static_cast<std::uint32_t>(epoch >> 32)};
  return Rng(seq);
}

}  // namespace caged
