#pragma once

#include <cstddef>
#include <cstdint>

namespace convsim {

// SplitMix64 finalizer. Bijective avalanche mix over 64-bit words; this is
// the primitive behind all seed derivation, so its exact form is part of the
// reproducibility contract (see docs/determinism.md).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic uniform random stream (SplitMix64 sequence). All stochastic
// code in this library draws from an explicitly passed Rng so that every
// result is a pure function of its seed. Never reseeded from global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1), 53 significant bits. Consumes one 64-bit word.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform double in [lo, hi). Consumes one word.
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform index in [0, n), n >= 1. Consumes one word.
  std::size_t next_index(std::size_t n) {
    std::size_t i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

 private:
  std::uint64_t state_;
};

// Seed for an independent derived stream, e.g. the planner and renderer of
// one conversation. `stream` tags the purpose.
constexpr std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ stream);
}

}  // namespace convsim
