#include "gdiff/random.hpp"

#include <cmath>
#include <numbers>

namespace gdiff {

double RandomStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 shifted into (0,1] so log() stays finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

RandomStream RandomStream::fork(std::uint64_t salt) const {
  // splitmix64 over a copy of the engine's next output, decorrelated by salt.
  std::mt19937_64 probe = gen_;
  std::uint64_t z = probe() ^ (salt * 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return RandomStream(z ^ (z >> 31));
}

}  // namespace gdiff
