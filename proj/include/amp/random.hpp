#pragma once

#include <cstdint>
#include <random>

namespace amp {

/// Seeded generator with a portable mapping to doubles, so identical seeds
/// give identical streams on every standard library.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace amp
