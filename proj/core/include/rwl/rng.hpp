#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace rwl {

// Reproducible random stream.
//
// The bit source is std::mt19937_64, whose output sequence is fixed by the
// C++ standard. All derived variates (uniform reals, bounded integers,
// normals) are computed here rather than through <random> distributions, whose
// algorithms are implementation-defined. Identical seeds therefore give
// identical streams on every conforming toolchain.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via the Box-Muller transform; the second variate of each
  // pair is cached.
  double normal();

  // SplitMix64 finaliser; used to derive independent stream seeds.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b = 0);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace rwl
