#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace oamcv {

// Finalizer from the splitmix64 generator; bijective 64-bit mixing.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for a named substream of a root seed.  Every consumer of randomness
// draws from its own named stream, so adding or reordering consumers never
// shifts the numbers seen by the others.
inline std::uint64_t substreamSeed(std::uint64_t rootSeed, std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the stream name
  for (unsigned char c : name) {
    h = (h ^ c) * 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(rootSeed) ^ h);
}

inline std::mt19937_64 substream(std::uint64_t rootSeed, std::string_view name) {
  return std::mt19937_64(substreamSeed(rootSeed, name));
}

}  // namespace oamcv
