#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>

namespace gemspec {

/// SplitMix64 finalizer; a bijective 64-bit mix.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of substream (stream, index) under a root seed. Frames and bootstrap
/// samples each draw from their own substream, so results do not depend on
/// evaluation order.
constexpr std::uint64_t substream_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(root) ^ stream) ^ index);
}

using Engine = boost::random::mt19937_64;

inline Engine substream(std::uint64_t root, std::uint64_t stream, std::uint64_t index) {
  return Engine(substream_seed(root, stream, index));
}

}  // namespace gemspec
