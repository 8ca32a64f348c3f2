#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "dicode/core/types.hpp"

namespace dicode {

/// splitmix64 mixer; used to derive independent child seeds from (base, index).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index);

/// Seeded random source. All draws are implemented on top of the raw engine
/// output so sequences are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [lo, hi] inclusive, unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal via the polar method (no cached second variate).
  double normal();
  Vec normal_vec(Index n);
  Mat normal_mat(Index rows, Index cols);
  Vec uniform_vec(Index n, double lo, double hi);

  /// New generator seeded from this one's stream.
  Rng fork() { return Rng(next_u64()); }

  std::string serialize() const;
  void deserialize(const std::string& state);

 private:
  std::mt19937_64 engine_;
};

}  // namespace dicode
