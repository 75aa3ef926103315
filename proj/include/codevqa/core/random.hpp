#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace codevqa {

// Uniform double in [0, 1) from the top 53 bits of one engine draw. Spelled
// out instead of std::uniform_real_distribution so streams are identical
// across standard libraries.
double unit_draw(std::mt19937_64& rng);
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

// Independent generator for (seed, stream): the same pair always yields the
// same sequence, different streams do not overlap in practice.
std::mt19937_64 seeded_stream(std::uint64_t seed, std::uint64_t stream);

}  // namespace codevqa
