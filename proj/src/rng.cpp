#include "vmptrack/rng.hpp"

#include <cmath>

namespace vmptrack {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t step, std::uint64_t stream) {
  const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ step) ^ (stream * 0x2545f4914f6cdd1dULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(step),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

cdouble complex_normal(std::mt19937_64& rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5 * variance));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

}  // namespace vmptrack
