#pragma once

#include <cstdint>
#include <random>

namespace gdiff {

/// Seeded random stream with a fixed normal-sampling algorithm (Box-Muller),
/// so a given seed reproduces the same draws independently of the standard
/// library's distribution implementations.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal draw.
  double normal();

  /// Derived stream with an independent seed; salt disambiguates uses.
  RandomStream fork(std::uint64_t salt) const;

private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gdiff
