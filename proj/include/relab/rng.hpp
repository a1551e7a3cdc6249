#pragma once

#include <cstdint>
#include <random>

namespace relab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d49bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent component streams derived from one master seed. Identical
/// (seed, stream tag) pairs always produce the same sequence.
enum class Stream : std::uint64_t {
  WorldGen = 1,
  PolicyInit = 2,
  ExploreInit = 3,
  ActionSampling = 4,
  MinibatchShuffle = 5,
  EnvMisc = 6,
};

inline std::mt19937_64 derive_rng(std::uint64_t master_seed, Stream stream) {
  return std::mt19937_64(splitmix64(master_seed ^ splitmix64(static_cast<std::uint64_t>(stream))));
}

inline std::mt19937_64 derive_rng(std::uint64_t master_seed, std::uint64_t tag) {
  return std::mt19937_64(splitmix64(master_seed ^ splitmix64(tag)));
}

}  // namespace relab
