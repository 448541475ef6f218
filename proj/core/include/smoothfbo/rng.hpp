#pragma once

#include <cstdint>
#include <string_view>

namespace smoothfbo {

// splitmix64 single step: returns the mixed value for state x + golden gamma.
std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a over the bytes of a label. Used only for seed derivation.
std::uint64_t fnv1a64(std::string_view s);

// Deterministic stream generator (xoshiro256++ 1.0, seeded via splitmix64).
//
// Every stream is fully described by one 64-bit seed. Forking derives a
// child seed from the parent SEED, never from the parent's position:
//
//   fork(label)        -> Rng(splitmix64(seed ^ fnv1a64(label)))
//   fork(label, index) -> Rng(splitmix64(splitmix64(seed ^ fnv1a64(label))
//                              + 0x9E3779B97F4A7C15 * (index + 1)))
//
// so the same (seed, label, index) always yields the same stream, no matter
// how much of the parent has been consumed and from which thread the fork
// happens. All draws (including gaussians, which use the polar method and
// never touch libm distribution code) are bit-identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01();

  // Standard normal via Marsaglia's polar method. Pairs are cached, so a
  // stream's gaussian sequence depends only on its own draw history.
  double gaussian();
  double gaussian(double mean, double stddev);

  Rng fork(std::string_view label) const;
  Rng fork(std::string_view label, std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace smoothfbo
