#pragma once

#include <cstdint>
#include <random>

#include "nmforge/real.hpp"

namespace nmforge {

// Seeded generator whose draws depend only on the engine output, so instances
// are reproducible across standard libraries (std distributions are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next() % span);
  }

  bool coin() { return (next() & 1u) != 0; }

  /// True with probability num/den.
  bool chance(std::uint64_t num, std::uint64_t den) { return next() % den < num; }

  /// Rational a/b with a in [lo, hi] and b in [1, max_den].
  Rational rational(std::int64_t lo, std::int64_t hi, std::int64_t max_den) {
    Rational q(static_cast<long>(uniform(lo, hi)), static_cast<unsigned long>(uniform(1, max_den)));
    q.canonicalize();
    return q;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace nmforge
