#pragma once

#include <cstdint>
#include <random>

#include "vmptrack/types.hpp"

namespace vmptrack {

std::uint64_t splitmix64(std::uint64_t x);

// Independent generator for a (seed, step, stream) triple.  Stream 0 is the
// receiver noise; stream 1 + l belongs to ground-truth object l.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t step, std::uint64_t stream);

// Circularly-symmetric complex normal with E|z|^2 = variance.
cdouble complex_normal(std::mt19937_64& rng, double variance);

}  // namespace vmptrack
