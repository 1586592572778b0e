#ifndef PGG_RNG_HPP
#define PGG_RNG_HPP

#include <cstdint>
#include <random>

namespace pgg {

// splitmix64 finalizer; used to derive independent substream seeds so
// that parallel runs are reproducible independent of scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x51ed270b9ULL));
}

using Rng = std::mt19937_64;

}  // namespace pgg

#endif  // PGG_RNG_HPP
