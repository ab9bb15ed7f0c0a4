#pragma once

#include <array>
#include <cstdint>

namespace ompn {

/// Deterministic pseudo-random generator with identical output on every
/// platform.  A 64-bit seed is expanded with the splitmix64 mixer into the
/// 256-bit state of a xoshiro256++ generator; uniform doubles are formed from
/// the top 53 bits of each output word, so streams are reproducible
/// bit-for-bit regardless of compiler or standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Next raw 64-bit word of the stream.
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 bits of precision.
  double next_double();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi);

  /// Uniform integer in [0, bound); bound must be positive.  Uses rejection
  /// sampling so the distribution is exactly uniform.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::array<std::uint64_t, 4> state_;
};

/// Order-sensitive mixing of two 64-bit values into one, used to derive
/// independent child seeds (per start, per candidate, ...) from a master seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace ompn
