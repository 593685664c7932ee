#pragma once

#include <cstdint>
#include <random>

#include "afshape/types.hpp"

namespace afs {

/// Derives an independent 64-bit stream seed for `trial` from a master seed.
///
/// The mapping is a SplitMix64 finalizer applied to a counter built from the
/// pair, so it is a bijection in `trial` for a fixed master seed: distinct
/// trials never collide.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t trial);

/// Thin wrapper over a 64-bit Mersenne twister with the draws the simulators need.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  std::size_t uniform_index(std::size_t n);
  double normal();
  /// Circular complex Gaussian with E|z|^2 = variance (each part variance/2).
  cd complex_normal(double variance);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace afs
