#pragma once

#include <cstdint>
#include <random>

namespace spa {

// All randomness in the library flows through named, seedable streams.
// A stream is an mt19937_64 engine whose seed is derived from a base seed
// plus integer labels (replicate index, stream role) via splitmix64, so
// distinct labels give statistically independent streams and the same
// labels always reproduce the same draws.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0) {
  std::uint64_t s = splitmix64(base);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  return s;
}

// Stream roles used by the simulation harness and the frontends.
enum class StreamRole : std::uint64_t {
  design = 1,  // entries of the design matrix X
  noise = 2,   // the additive Gaussian noise xi
  chain = 3,   // Metropolis-Hastings proposals and accept draws
};

inline Rng make_stream(std::uint64_t base, std::uint64_t rep, StreamRole role) {
  return Rng(derive_seed(base, rep, static_cast<std::uint64_t>(role)));
}

}  // namespace spa
