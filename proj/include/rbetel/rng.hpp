#ifndef RBETEL_RNG_HPP_
#define RBETEL_RNG_HPP_

#include <cstdint>
#include <random>

namespace rbetel {

// splitmix64 step; used to decorrelate derived seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent generator for stream `id` derived from a master seed.
// Replications and worker threads each get their own stream, so results do
// not depend on scheduling order.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t id = 0) {
  return std::mt19937_64(mix64(mix64(seed) ^ mix64(id + 0x51ed2701a2b9e4d3ULL)));
}

} // namespace rbetel

#endif // RBETEL_RNG_HPP_
